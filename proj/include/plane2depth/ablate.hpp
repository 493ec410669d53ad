#pragma once

#include "plane2depth/trainer.hpp"

#include <string>
#include <vector>

namespace p2d {

struct AblationRow {
    std::string name;
    MetricReport metrics;
};

struct AblationTable {
    std::string study;
    std::vector<AblationRow> rows;
    std::string text;
};

// Trains one run per configuration arm with a shared seed and evaluates each on
// the held-out set (eval_dataset_dir, falling back to the training set).
// Studies: "afm" toggles the feature modulators at equal layer count, "ncdc"
// sweeps the normal/distance constraint grid, "queries" sweeps the query count.
AblationTable run_ablation(const std::string& study, const RunConfig& base,
                           const std::vector<int>& query_counts = {8, 32, 64});

std::string ablation_json(const AblationTable& table);

}  // namespace p2d
