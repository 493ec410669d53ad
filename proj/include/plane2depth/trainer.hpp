#pragma once

#include "plane2depth/checkpoint.hpp"
#include "plane2depth/config.hpp"
#include "plane2depth/dataset.hpp"
#include "plane2depth/metrics.hpp"

#include <functional>
#include <string>
#include <vector>

namespace p2d {

struct TrainResult {
    std::string checkpoint_base;
    long iterations_run = 0;
    double final_loss = 0.0;
};

// Runs the training loop described by the config: seeded minibatches, Adam,
// JSON-lines log at <output_dir>/train_log.jsonl, periodic and final checkpoints.
// `resume_base` continues iteration numbering and optimizer state from an
// earlier checkpoint. Aborts with TrainError on a non-finite loss after dumping
// the offending batch to nan_dump.json.
TrainResult train(const RunConfig& cfg, const std::string& resume_base = "");

struct PredictedMaps {
    DepthMap depth;
    NormalMap normals;
    DistanceMap distance;
};

// Type-erased inference handle; dispatches over the checkpoint dtype.
struct Predictor {
    net::NetConfig config;
    std::string dtype;
    long iteration = 0;
    std::function<PredictedMaps(const Grid<Vec3>& rgb, const CameraIntrinsics& K,
                                double max_depth)>
        run;
};

Predictor load_predictor(const std::string& checkpoint_base);

struct EvalOptions {
    bool export_maps = false;
    bool oracle_gt_planes = false;  // GT plane fields through the depth conversion
    double error_cap = 0.5;        // meters; error-map colorization clip
    std::string export_dir;
};

struct EvalResult {
    std::vector<std::string> names;
    std::vector<MetricReport> per_image;
    MetricReport aggregate;
};

// Per-image metrics in manifest order plus their image-level mean. `pred` may be
// null only with opts.oracle_gt_planes.
EvalResult evaluate_dataset(const Predictor* pred, const std::string& dataset_dir,
                            const EvalOptions& opts = {});

}  // namespace p2d
