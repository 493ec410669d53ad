#include "plane2depth/metrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace p2d {

MetricReport evaluate(const DepthMap& pred, const DepthMap& gt, double cap) {
    if (!pred.values.same_shape(gt.values)) {
        throw UsageError("evaluate: prediction/ground-truth shape mismatch");
    }
    if (!(cap > 0.0)) throw UsageError("evaluate: cap must be positive");

    MetricReport r;
    double abs_rel = 0, sq_rel = 0, sq = 0, sq_log = 0, l10 = 0;
    long d1 = 0, d2 = 0, d3 = 0;
    const double t1 = 1.25, t2 = 1.25 * 1.25, t3 = 1.25 * 1.25 * 1.25;

    for (size_t i = 0; i < gt.values.size(); ++i) {
        if (!gt.valid[i] || !pred.valid[i]) continue;
        const double g = gt.values[i];
        if (!(g > 0.0) || g > cap) continue;
        double d = pred.values[i];
        if (d <= 0.0) {
            d = 1e-3;
            ++r.clamped_predictions;
        }
        const double diff = d - g;
        abs_rel += std::abs(diff) / g;
        sq_rel += diff * diff / g;
        sq += diff * diff;
        const double dlog = std::log(d) - std::log(g);
        sq_log += dlog * dlog;
        l10 += std::abs(std::log10(d) - std::log10(g));
        const double ratio = std::max(d / g, g / d);
        if (ratio < t1) ++d1;
        if (ratio < t2) ++d2;
        if (ratio < t3) ++d3;
        ++r.valid_pixel_count;
    }
    if (r.valid_pixel_count == 0) {
        throw UsageError("evaluate: no jointly-valid pixels under the cap");
    }
    const double n = static_cast<double>(r.valid_pixel_count);
    r.abs_rel = abs_rel / n;
    r.sq_rel = sq_rel / n;
    r.rmse = std::sqrt(sq / n);
    r.rmse_log = std::sqrt(sq_log / n);
    r.log10 = l10 / n;
    r.delta1 = d1 / n;
    r.delta2 = d2 / n;
    r.delta3 = d3 / n;
    return r;
}

MetricReport aggregate(const std::vector<MetricReport>& reports) {
    if (reports.empty()) throw UsageError("aggregate: empty report list");
    MetricReport out;
    for (const auto& r : reports) {
        out.abs_rel += r.abs_rel;
        out.sq_rel += r.sq_rel;
        out.rmse += r.rmse;
        out.rmse_log += r.rmse_log;
        out.log10 += r.log10;
        out.delta1 += r.delta1;
        out.delta2 += r.delta2;
        out.delta3 += r.delta3;
        out.valid_pixel_count += r.valid_pixel_count;
        out.clamped_predictions += r.clamped_predictions;
    }
    const double n = static_cast<double>(reports.size());
    out.abs_rel /= n;
    out.sq_rel /= n;
    out.rmse /= n;
    out.rmse_log /= n;
    out.log10 /= n;
    out.delta1 /= n;
    out.delta2 /= n;
    out.delta3 /= n;
    return out;
}

std::string metric_report_json(const MetricReport& r) {
    nlohmann::json j{{"abs_rel", r.abs_rel},
                     {"sq_rel", r.sq_rel},
                     {"rmse", r.rmse},
                     {"rmse_log", r.rmse_log},
                     {"log10", r.log10},
                     {"delta1", r.delta1},
                     {"delta2", r.delta2},
                     {"delta3", r.delta3},
                     {"valid_pixel_count", r.valid_pixel_count},
                     {"clamped_predictions", r.clamped_predictions}};
    return j.dump();
}

std::string metric_table(const std::vector<std::string>& row_names,
                         const std::vector<MetricReport>& reports) {
    if (row_names.size() != reports.size()) {
        throw UsageError("metric_table: name/report count mismatch");
    }
    size_t name_w = 6;
    for (const auto& n : row_names) name_w = std::max(name_w, n.size());

    std::ostringstream out;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%-*s  %8s %8s %8s %8s %8s %8s %8s %8s\n",
                  static_cast<int>(name_w), "name", "RMSE", "AbsRel", "log10", "d1", "d2", "d3",
                  "SqRel", "RMSElog");
    out << buf;
    for (size_t i = 0; i < reports.size(); ++i) {
        const MetricReport& r = reports[i];
        std::snprintf(buf, sizeof(buf),
                      "%-*s  %8.4f %8.4f %8.4f %8.4f %8.4f %8.4f %8.4f %8.4f\n",
                      static_cast<int>(name_w), row_names[i].c_str(), r.rmse, r.abs_rel, r.log10,
                      r.delta1, r.delta2, r.delta3, r.sq_rel, r.rmse_log);
        out << buf;
    }
    return out.str();
}

}  // namespace p2d
