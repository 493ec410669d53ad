#pragma once

#include "plane2depth/network.hpp"
#include "plane2depth/types.hpp"

#include <string>
#include <utility>
#include <vector>

namespace p2d {

// Named float64 tensors, the unit of checkpoint storage. Network parameters keep
// their creation names; Adam state is stored alongside as adam.m.<name> /
// adam.v.<name>. float32 runs round-trip exactly through the float64 blob.
struct RawTensors {
    std::vector<std::pair<std::string, Eigen::MatrixXd>> entries;

    const Eigen::MatrixXd* find(const std::string& name) const {
        for (const auto& [n, v] : entries) {
            if (n == name) return &v;
        }
        return nullptr;
    }
};

struct CheckpointMeta {
    net::NetConfig config;
    long iteration = 0;
    std::string dtype = "float32";
    bool has_optimizer = false;
    long adam_step = 0;
    std::uint64_t train_seed = 0;
};

// Binary blob layout (little endian): magic "P2DTNSR1", u32 count, then per
// tensor: u32 name length, name bytes, u32 rows, u32 cols, float64 data in
// column-major order.
void write_tensor_blob(const std::string& path, const RawTensors& tensors);
RawTensors read_tensor_blob(const std::string& path);

// `base` names a pair base.bin / base.json.
void write_checkpoint(const std::string& base, const CheckpointMeta& meta,
                      const RawTensors& tensors);
CheckpointMeta read_checkpoint_meta(const std::string& base);
RawTensors read_checkpoint_tensors(const std::string& base);

std::string net_config_json(const net::NetConfig& cfg);
net::NetConfig net_config_from_json_text(const std::string& text);

template <typename S>
RawTensors params_to_tensors(const net::ParamStore<S>& params) {
    RawTensors out;
    out.entries.reserve(params.count());
    for (size_t i = 0; i < params.count(); ++i) {
        out.entries.emplace_back(params.names[i], params.values[i].template cast<double>());
    }
    return out;
}

template <typename S>
void load_params_from_tensors(net::ParamStore<S>& params, const RawTensors& tensors) {
    for (size_t i = 0; i < params.count(); ++i) {
        const Eigen::MatrixXd* t = tensors.find(params.names[i]);
        if (!t) throw IoError("checkpoint is missing tensor: " + params.names[i]);
        if (t->rows() != params.values[i].rows() || t->cols() != params.values[i].cols()) {
            throw IoError("checkpoint tensor shape mismatch: " + params.names[i]);
        }
        params.values[i] = t->cast<S>();
    }
}

}  // namespace p2d
