#pragma once

#include "plane2depth/types.hpp"

#include <string>
#include <vector>

namespace p2d {

struct MetricReport {
    double abs_rel = 0.0;
    double sq_rel = 0.0;
    double rmse = 0.0;
    double rmse_log = 0.0;
    double log10 = 0.0;
    double delta1 = 0.0;
    double delta2 = 0.0;
    double delta3 = 0.0;
    long valid_pixel_count = 0;
    long clamped_predictions = 0;  // non-positive predictions clamped to 1e-3 m
};

// Standard depth metrics over jointly-valid pixels with GT capped to (0, cap].
// Non-positive predictions are clamped to 1e-3 m before the log metrics and
// counted. Throws UsageError on shape mismatch or zero valid pixels.
MetricReport evaluate(const DepthMap& pred, const DepthMap& gt, double cap);

// Image-level mean of each metric (equal weight per image); valid_pixel_count and
// clamp counts are summed. Throws UsageError on an empty list.
MetricReport aggregate(const std::vector<MetricReport>& reports);

std::string metric_report_json(const MetricReport& r);

// Aligned table, one row per report plus the aggregate; columns ordered
// RMSE, AbsRel, log10, d1, d2, d3, then SqRel and RMSElog.
std::string metric_table(const std::vector<std::string>& row_names,
                         const std::vector<MetricReport>& reports);

}  // namespace p2d
