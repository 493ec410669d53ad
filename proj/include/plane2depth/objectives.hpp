#pragma once

#include "plane2depth/autodiff.hpp"
#include "plane2depth/network.hpp"
#include "plane2depth/types.hpp"

namespace p2d {

struct LossWeights {
    double lambda = 0.15;  // SI variance factor
    double alpha = 10.0;   // depth term
    double beta = 5.0;     // normal term
    double gamma = 1.0;    // distance term
};

// Map-level losses over jointly-valid pixels. All throw std::domain_error when no
// jointly-valid pixel exists; si_loss also rejects non-positive depths.
double si_loss(const DepthMap& pred, const DepthMap& gt, double lambda);
double normal_loss(const NormalMap& pred, const NormalMap& gt);
double distance_loss(const DistanceMap& pred, const DistanceMap& gt);

// Ground truth resampled onto the supervised stride-4 grid. `valid` is a 0/1
// column, log_depth holds log(depth) on valid pixels and 0 elsewhere.
template <typename S>
struct CoarseGt {
    ad::Mat<S> depth;      // [N×1]
    ad::Mat<S> log_depth;  // [N×1]
    ad::Mat<S> normals;    // [N×3], zero rows where invalid
    ad::Mat<S> distance;   // [N×1]
    ad::Mat<S> valid;      // [N×1] in {0,1}
    long valid_count = 0;
};

namespace detail {

template <typename S>
void require_valid_pixels(const CoarseGt<S>& gt, const char* which) {
    if (gt.valid_count <= 0) {
        throw std::domain_error(std::string(which) + ": no jointly-valid pixels");
    }
}

}  // namespace detail

// sqrt(mean Δ² − λ·(mean Δ)²) with Δ = log pred − log gt over valid pixels; the
// sqrt derivative is floored at 1e-6 so a perfect prediction stays differentiable.
template <typename S>
ad::Var si_loss_tape(ad::Tape<S>& tape, ad::Var pred_depth, const CoarseGt<S>& gt, S lambda) {
    detail::require_valid_pixels(gt, "si_loss");
    const S inv_k = S(1) / static_cast<S>(gt.valid_count);
    ad::Var delta = tape.mul_const(tape.add_const(tape.log_elem(pred_depth), -gt.log_depth),
                                   gt.valid);
    ad::Var mean_sq = tape.scale(tape.sum_all(tape.square(delta)), inv_k);
    ad::Var mean = tape.scale(tape.sum_all(delta), inv_k);
    ad::Var arg = tape.sub(mean_sq, tape.scale(tape.square(mean), lambda));
    return tape.sqrt_floored(arg, S(1e-6));
}

// mean(1 − N_pred·N_gt) over valid pixels.
template <typename S>
ad::Var normal_loss_tape(ad::Tape<S>& tape, ad::Var pred_normals, const CoarseGt<S>& gt) {
    detail::require_valid_pixels(gt, "normal_loss");
    const S inv_k = S(1) / static_cast<S>(gt.valid_count);
    ad::Var dots = tape.row_sum(tape.mul_const(pred_normals, gt.normals));
    ad::Var residual = tape.mul_const(tape.add_const(tape.scale(dots, S(-1)), gt.valid), gt.valid);
    return tape.scale(tape.sum_all(residual), inv_k);
}

// mean |T_pred − T_gt| over valid pixels.
template <typename S>
ad::Var distance_loss_tape(ad::Tape<S>& tape, ad::Var pred_distance, const CoarseGt<S>& gt) {
    detail::require_valid_pixels(gt, "distance_loss");
    const S inv_k = S(1) / static_cast<S>(gt.valid_count);
    ad::Var diff = tape.mul_const(tape.add_const(pred_distance, -gt.distance), gt.valid);
    return tape.scale(tape.sum_all(tape.abs_elem(diff)), inv_k);
}

template <typename S>
struct LossTerms {
    ad::Var total = -1;
    double si = 0.0;
    double normal = 0.0;
    double distance = 0.0;
};

// α·L_D + β·L_N + γ·L_T per supervised layer, averaged over layers
// (all layers by default, last layer only otherwise).
template <typename S>
LossTerms<S> total_loss_tape(ad::Tape<S>& tape, const net::ForwardVars<S>& fw,
                             const CoarseGt<S>& gt, const LossWeights& weights,
                             bool supervise_all_layers = true) {
    if (fw.layers.empty()) throw UsageError("total_loss: no supervised layers");
    const size_t first = supervise_all_layers ? 0 : fw.layers.size() - 1;

    LossTerms<S> terms;
    ad::Var acc = -1;
    int n_layers = 0;
    for (size_t l = first; l < fw.layers.size(); ++l) {
        const auto& layer = fw.layers[l];
        ad::Var si = si_loss_tape(tape, layer.depth, gt, S(weights.lambda));
        ad::Var nl = normal_loss_tape(tape, layer.normals, gt);
        ad::Var dl = distance_loss_tape(tape, layer.distance, gt);
        terms.si += static_cast<double>(tape.val(si)(0, 0));
        terms.normal += static_cast<double>(tape.val(nl)(0, 0));
        terms.distance += static_cast<double>(tape.val(dl)(0, 0));
        ad::Var combo = tape.add(tape.add(tape.scale(si, S(weights.alpha)),
                                          tape.scale(nl, S(weights.beta))),
                                 tape.scale(dl, S(weights.gamma)));
        acc = acc < 0 ? combo : tape.add(acc, combo);
        ++n_layers;
    }
    terms.total = tape.scale(acc, S(1.0 / n_layers));
    terms.si /= n_layers;
    terms.normal /= n_layers;
    terms.distance /= n_layers;
    return terms;
}

}  // namespace p2d
