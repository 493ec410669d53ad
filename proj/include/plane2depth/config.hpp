#pragma once

#include "plane2depth/network.hpp"
#include "plane2depth/objectives.hpp"
#include "plane2depth/types.hpp"

#include <cstdint>
#include <string>

namespace p2d {

struct RunConfig {
    std::string dataset_dir;
    std::string eval_dataset_dir;  // falls back to dataset_dir when empty
    std::string output_dir = "run";

    int image_width = 64;
    int image_height = 64;

    int queries = 64;
    int channels = 64;
    int query_dim = 64;
    int layers_per_scale = 1;
    int heads = 1;
    bool af_modulators = true;
    bool supervise_all_layers = true;

    LossWeights weights;

    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    bool lr_linear_decay = false;

    int batch_size = 8;
    long iterations = 5000;
    std::uint64_t seed = 0;
    int checkpoint_interval = 1000;
    bool flip_augmentation = true;
    std::string dtype = "float32";  // float32 | float64

    void validate() const;  // throws ConfigError naming the offending field

    net::NetConfig net_config(double max_depth) const {
        net::NetConfig cfg;
        cfg.queries = queries;
        cfg.channels = channels;
        cfg.query_dim = query_dim;
        cfg.layers_per_scale = layers_per_scale;
        cfg.heads = heads;
        cfg.af_modulators = af_modulators;
        cfg.max_depth = max_depth;
        return cfg;
    }
};

// Reads a run config from a .json file or a flat TOML file of `key = value`
// lines. Field names match the struct; unknown keys are rejected.
RunConfig run_config_from_file(const std::string& path);
std::string run_config_json(const RunConfig& cfg);

}  // namespace p2d
