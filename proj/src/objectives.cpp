#include "plane2depth/objectives.hpp"

#include <cmath>
#include <stdexcept>

namespace p2d {

double si_loss(const DepthMap& pred, const DepthMap& gt, double lambda) {
    if (!pred.values.same_shape(gt.values)) {
        throw UsageError("si_loss: shape mismatch");
    }
    double sum = 0.0, sum_sq = 0.0;
    long k = 0;
    for (size_t i = 0; i < gt.values.size(); ++i) {
        if (!pred.valid[i] || !gt.valid[i]) continue;
        if (!(pred.values[i] > 0.0) || !(gt.values[i] > 0.0)) {
            throw std::domain_error("si_loss: depths must be positive on valid pixels");
        }
        const double d = std::log(pred.values[i]) - std::log(gt.values[i]);
        sum += d;
        sum_sq += d * d;
        ++k;
    }
    if (k == 0) throw std::domain_error("si_loss: no jointly-valid pixels");
    const double mean = sum / k;
    const double arg = sum_sq / k - lambda * mean * mean;
    return std::sqrt(std::max(arg, 0.0));
}

double normal_loss(const NormalMap& pred, const NormalMap& gt) {
    if (!pred.vectors.same_shape(gt.vectors)) {
        throw UsageError("normal_loss: shape mismatch");
    }
    double sum = 0.0;
    long k = 0;
    for (size_t i = 0; i < gt.vectors.size(); ++i) {
        if (!pred.valid[i] || !gt.valid[i]) continue;
        sum += 1.0 - pred.vectors[i].dot(gt.vectors[i]);
        ++k;
    }
    if (k == 0) throw std::domain_error("normal_loss: no jointly-valid pixels");
    return sum / k;
}

double distance_loss(const DistanceMap& pred, const DistanceMap& gt) {
    if (!pred.values.same_shape(gt.values)) {
        throw UsageError("distance_loss: shape mismatch");
    }
    double sum = 0.0;
    long k = 0;
    for (size_t i = 0; i < gt.values.size(); ++i) {
        if (!pred.valid[i] || !gt.valid[i]) continue;
        sum += std::abs(pred.values[i] - gt.values[i]);
        ++k;
    }
    if (k == 0) throw std::domain_error("distance_loss: no jointly-valid pixels");
    return sum / k;
}

}  // namespace p2d
