#pragma once

#include "plane2depth/types.hpp"

#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

namespace p2d::ad {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

using Var = int;

// Gather plan mapping a [H_in*W_in × C] feature grid to im2col rows
// [H_out*W_out × taps*C]; -1 entries read as zero padding.
struct Im2ColPlan {
    int in_rows = 0;
    int out_rows = 0;
    int taps = 0;
    std::vector<int> gather;  // out_rows * taps entries
};

Im2ColPlan make_conv3x3_plan(int height, int width, int stride);

inline int conv_out_size(int n, int stride) { return (n - 1) / stride + 1; }

// Reverse-mode tape over dense Eigen matrices. Nodes are created in topological
// order; backward() walks them in reverse. One tape per forward pass; not movable
// because closures capture `this`.
template <typename S>
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var leaf(Mat<S> value) { return make_node(std::move(value)); }

    const Mat<S>& val(Var v) const { return nodes_[v].value; }
    const Mat<S>& grad(Var v) const { return nodes_[v].grad; }
    size_t size() const { return nodes_.size(); }

    void backward(Var loss) {
        if (val(loss).rows() != 1 || val(loss).cols() != 1) {
            throw UsageError("backward: loss must be a 1x1 value");
        }
        for (auto& n : nodes_) {
            n.grad = Mat<S>::Zero(n.value.rows(), n.value.cols());
        }
        nodes_[loss].grad(0, 0) = S(1);
        for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
            if (nodes_[i].back) nodes_[i].back();
        }
    }

    Var matmul(Var a, Var b, bool ta = false, bool tb = false) {
        const Mat<S>& A = val(a);
        const Mat<S>& B = val(b);
        Mat<S> value;
        if (!ta && !tb) value = A * B;
        else if (!ta && tb) value = A * B.transpose();
        else if (ta && !tb) value = A.transpose() * B;
        else value = A.transpose() * B.transpose();
        Var out = make_node(std::move(value));
        nodes_[out].back = [this, a, b, out, ta, tb] {
            const Mat<S>& G = grad_ref(out);
            const Mat<S>& A = val(a);
            const Mat<S>& B = val(b);
            if (!ta && !tb) {
                grad_ref(a) += G * B.transpose();
                grad_ref(b) += A.transpose() * G;
            } else if (!ta && tb) {
                grad_ref(a) += G * B;
                grad_ref(b) += G.transpose() * A;
            } else if (ta && !tb) {
                grad_ref(a) += B * G.transpose();
                grad_ref(b) += A * G;
            } else {
                grad_ref(a) += B.transpose() * G.transpose();
                grad_ref(b) += G.transpose() * A.transpose();
            }
        };
        return out;
    }

    Var add(Var a, Var b) {
        check_same_shape(a, b, "add");
        Var out = make_node(val(a) + val(b));
        nodes_[out].back = [this, a, b, out] {
            grad_ref(a) += grad_ref(out);
            grad_ref(b) += grad_ref(out);
        };
        return out;
    }

    Var sub(Var a, Var b) {
        check_same_shape(a, b, "sub");
        Var out = make_node(val(a) - val(b));
        nodes_[out].back = [this, a, b, out] {
            grad_ref(a) += grad_ref(out);
            grad_ref(b) -= grad_ref(out);
        };
        return out;
    }

    Var scale(Var a, S c) {
        Var out = make_node(val(a) * c);
        nodes_[out].back = [this, a, out, c] { grad_ref(a) += grad_ref(out) * c; };
        return out;
    }

    Var add_const(Var a, const Mat<S>& c) {
        Var out = make_node(val(a) + c);
        nodes_[out].back = [this, a, out] { grad_ref(a) += grad_ref(out); };
        return out;
    }

    Var mul_const(Var a, Mat<S> c) {
        Mat<S> value = val(a).cwiseProduct(c);
        Var out = make_node(std::move(value));
        nodes_[out].back = [this, a, out, c = std::move(c)] {
            grad_ref(a) += grad_ref(out).cwiseProduct(c);
        };
        return out;
    }

    Var hadamard(Var a, Var b) {
        check_same_shape(a, b, "hadamard");
        Var out = make_node(val(a).cwiseProduct(val(b)));
        nodes_[out].back = [this, a, b, out] {
            grad_ref(a) += grad_ref(out).cwiseProduct(val(b));
            grad_ref(b) += grad_ref(out).cwiseProduct(val(a));
        };
        return out;
    }

    Var cdiv(Var a, Var b) {
        check_same_shape(a, b, "cdiv");
        Var out = make_node(val(a).cwiseQuotient(val(b)));
        nodes_[out].back = [this, a, b, out] {
            const Mat<S>& G = grad_ref(out);
            grad_ref(a) += G.cwiseQuotient(val(b));
            grad_ref(b) -= G.cwiseProduct(val(out)).cwiseQuotient(val(b));
        };
        return out;
    }

    // a [N×C] plus a [1×C] bias row broadcast over rows.
    Var add_row_bias(Var a, Var bias) {
        if (val(bias).rows() != 1 || val(bias).cols() != val(a).cols()) {
            throw UsageError("add_row_bias: bias must be 1 x cols(a)");
        }
        Mat<S> value = val(a);
        value.rowwise() += val(bias).row(0);
        Var out = make_node(std::move(value));
        nodes_[out].back = [this, a, bias, out] {
            grad_ref(a) += grad_ref(out);
            grad_ref(bias) += grad_ref(out).colwise().sum();
        };
        return out;
    }

    Var relu(Var a) {
        Var out = make_node(val(a).cwiseMax(S(0)));
        nodes_[out].back = [this, a, out] {
            grad_ref(a).array() +=
                grad_ref(out).array() * (val(a).array() > S(0)).template cast<S>();
        };
        return out;
    }

    Var gelu(Var a) {
        auto cdf = [](S x) {
            return S(0.5) * (S(1) + std::erf(x / S(std::numbers::sqrt2)));
        };
        Mat<S> value = val(a).unaryExpr([&](S x) { return x * cdf(x); });
        Var out = make_node(std::move(value));
        nodes_[out].back = [this, a, out, cdf] {
            const Mat<S> d = val(a).unaryExpr([&](S x) {
                const S pdf = std::exp(-x * x / S(2)) * S(1.0 / std::sqrt(2.0 * std::numbers::pi));
                return cdf(x) + x * pdf;
            });
            grad_ref(a).array() += grad_ref(out).array() * d.array();
        };
        return out;
    }

    Var sigmoid(Var a) {
        Mat<S> value = (S(1) / (S(1) + (-val(a).array()).exp())).matrix();
        Var out = make_node(std::move(value));
        nodes_[out].back = [this, a, out] {
            const auto y = val(out).array();
            grad_ref(a).array() += grad_ref(out).array() * y * (S(1) - y);
        };
        return out;
    }

    Var log_elem(Var a) {
        Var out = make_node(val(a).array().log().matrix());
        nodes_[out].back = [this, a, out] {
            grad_ref(a).array() += grad_ref(out).array() / val(a).array();
        };
        return out;
    }

    Var abs_elem(Var a) {
        Var out = make_node(val(a).cwiseAbs());
        nodes_[out].back = [this, a, out] {
            grad_ref(a).array() += grad_ref(out).array() * val(a).array().sign();
        };
        return out;
    }

    Var square(Var a) {
        Var out = make_node(val(a).array().square().matrix());
        nodes_[out].back = [this, a, out] {
            grad_ref(a).array() += S(2) * grad_ref(out).array() * val(a).array();
        };
        return out;
    }

    Var softmax_rows(Var a) { return softmax_rows_impl(a, nullptr); }

    // Additive mask with entries 0 or -inf; every row must keep at least one
    // finite entry. Masked positions receive exactly zero weight.
    Var softmax_rows_masked(Var a, const Mat<S>& additive_mask) {
        return softmax_rows_impl(a, &additive_mask);
    }

    Var layer_norm(Var x, Var gain, Var bias, S eps = S(1e-5)) {
        const Mat<S>& X = val(x);
        const int cols = static_cast<int>(X.cols());
        if (val(gain).rows() != 1 || val(gain).cols() != cols || val(bias).rows() != 1 ||
            val(bias).cols() != cols) {
            throw UsageError("layer_norm: gain/bias must be 1 x cols(x)");
        }
        Mat<S> mean = X.rowwise().mean();
        Mat<S> centered = X.colwise() - mean.col(0);
        Mat<S> inv_std =
            (centered.array().square().rowwise().mean() + eps).sqrt().inverse().matrix();
        Mat<S> xhat = centered.array().colwise() * inv_std.col(0).array();
        Mat<S> value = (xhat.array().rowwise() * val(gain).row(0).array()).matrix();
        value.rowwise() += val(bias).row(0);
        Var out = make_node(std::move(value));
        nodes_[out].back = [this, x, gain, bias, out, xhat = std::move(xhat),
                            inv_std = std::move(inv_std)] {
            const Mat<S>& G = grad_ref(out);
            grad_ref(bias) += G.colwise().sum();
            grad_ref(gain) += (G.array() * xhat.array()).colwise().sum().matrix();
            Mat<S> gx = (G.array().rowwise() * val(gain).row(0).array()).matrix();
            Mat<S> m1 = gx.rowwise().mean();
            Mat<S> m2 = (gx.array() * xhat.array()).rowwise().mean().matrix();
            grad_ref(x).array() +=
                ((gx.array().colwise() - m1.col(0).array()) -
                 xhat.array().colwise() * m2.col(0).array())
                    .colwise() *
                inv_std.col(0).array();
        };
        return out;
    }

    // Unit-normalize each row; rows with norm < eps become `fallback` with zero
    // gradient and are counted.
    Var renormalize_rows(Var x, S eps, const Eigen::RowVectorX<S>& fallback,
                         int* degenerate_counter = nullptr) {
        const Mat<S>& X = val(x);
        if (fallback.cols() != X.cols()) {
            throw UsageError("renormalize_rows: fallback width mismatch");
        }
        Mat<S> norms = X.rowwise().norm();
        Mat<S> value(X.rows(), X.cols());
        std::vector<char> degenerate(static_cast<size_t>(X.rows()), 0);
        for (int i = 0; i < X.rows(); ++i) {
            if (norms(i, 0) < eps) {
                value.row(i) = fallback;
                degenerate[static_cast<size_t>(i)] = 1;
                if (degenerate_counter) ++*degenerate_counter;
            } else {
                value.row(i) = X.row(i) / norms(i, 0);
            }
        }
        Var out = make_node(std::move(value));
        nodes_[out].back = [this, x, out, norms = std::move(norms),
                            degenerate = std::move(degenerate)] {
            const Mat<S>& G = grad_ref(out);
            const Mat<S>& Y = val(out);
            Mat<S>& gx = grad_ref(x);
            for (int i = 0; i < G.rows(); ++i) {
                if (degenerate[static_cast<size_t>(i)]) continue;
                const S dot = Y.row(i).dot(G.row(i));
                gx.row(i) += (G.row(i) - dot * Y.row(i)) / norms(i, 0);
            }
        };
        return out;
    }

    Var row_sum(Var a) {
        Var out = make_node(val(a).rowwise().sum());
        nodes_[out].back = [this, a, out] {
            grad_ref(a).colwise() += grad_ref(out).col(0);
        };
        return out;
    }

    Var sum_all(Var a) {
        Mat<S> value(1, 1);
        value(0, 0) = val(a).sum();
        Var out = make_node(std::move(value));
        nodes_[out].back = [this, a, out] {
            grad_ref(a).array() += grad_ref(out)(0, 0);
        };
        return out;
    }

    Var mean_all(Var a) {
        const S inv = S(1) / static_cast<S>(val(a).size());
        return scale(sum_all(a), inv);
    }

    Var slice_cols(Var a, int j0, int n) {
        Var out = make_node(val(a).middleCols(j0, n));
        nodes_[out].back = [this, a, out, j0, n] {
            grad_ref(a).middleCols(j0, n) += grad_ref(out);
        };
        return out;
    }

    Var concat_cols(const std::vector<Var>& parts) {
        if (parts.empty()) throw UsageError("concat_cols: empty part list");
        int cols = 0;
        for (Var p : parts) cols += static_cast<int>(val(p).cols());
        Mat<S> value(val(parts[0]).rows(), cols);
        int at = 0;
        for (Var p : parts) {
            value.middleCols(at, val(p).cols()) = val(p);
            at += static_cast<int>(val(p).cols());
        }
        Var out = make_node(std::move(value));
        nodes_[out].back = [this, parts, out] {
            int at = 0;
            for (Var p : parts) {
                const int n = static_cast<int>(val(p).cols());
                grad_ref(p) += grad_ref(out).middleCols(at, n);
                at += n;
            }
        };
        return out;
    }

    Var im2col(Var a, const Im2ColPlan& plan) {
        const Mat<S>& A = val(a);
        if (A.rows() != plan.in_rows) throw UsageError("im2col: input row count mismatch");
        const int c = static_cast<int>(A.cols());
        Mat<S> value = Mat<S>::Zero(plan.out_rows, plan.taps * c);
        for (int r = 0; r < plan.out_rows; ++r) {
            for (int j = 0; j < plan.taps; ++j) {
                const int src = plan.gather[static_cast<size_t>(r) * plan.taps + j];
                if (src >= 0) value.block(r, j * c, 1, c) = A.row(src);
            }
        }
        Var out = make_node(std::move(value));
        nodes_[out].back = [this, a, out, gather = plan.gather, taps = plan.taps,
                            out_rows = plan.out_rows, c] {
            const Mat<S>& G = grad_ref(out);
            Mat<S>& gx = grad_ref(a);
            for (int r = 0; r < out_rows; ++r) {
                for (int j = 0; j < taps; ++j) {
                    const int src = gather[static_cast<size_t>(r) * taps + j];
                    if (src >= 0) gx.row(src) += G.block(r, j * c, 1, c);
                }
            }
        };
        return out;
    }

    // Elementwise sqrt whose derivative is floored: d/dx = 1 / (2·max(√x, √floor)).
    // Tiny negative inputs (float cancellation) are treated as zero.
    Var sqrt_floored(Var a, S floor_val) {
        Var out = make_node(val(a).array().max(S(0)).sqrt().matrix());
        const S denom_floor = std::sqrt(floor_val);
        nodes_[out].back = [this, a, out, denom_floor] {
            grad_ref(a).array() += grad_ref(out).array() /
                                   (S(2) * val(out).array().max(denom_floor));
        };
        return out;
    }

    // Clamp into [lo, hi]; gradient passes only strictly inside the interval.
    Var clamp(Var a, S lo, S hi) {
        Var out = make_node(val(a).cwiseMax(lo).cwiseMin(hi));
        nodes_[out].back = [this, a, out, lo, hi] {
            const auto inside =
                (val(a).array() > lo && val(a).array() < hi).template cast<S>();
            grad_ref(a).array() += grad_ref(out).array() * inside;
        };
        return out;
    }

    Var dot_rows(Var a, Var b) { return row_sum(hadamard(a, b)); }

private:
    struct Node {
        Mat<S> value;
        Mat<S> grad;
        std::function<void()> back;
    };

    Var make_node(Mat<S> value) {
        nodes_.push_back(Node{std::move(value), {}, {}});
        return static_cast<Var>(nodes_.size() - 1);
    }

    Mat<S>& grad_ref(Var v) { return nodes_[v].grad; }

    void check_same_shape(Var a, Var b, const char* op) const {
        if (val(a).rows() != val(b).rows() || val(a).cols() != val(b).cols()) {
            throw UsageError(std::string(op) + ": shape mismatch");
        }
    }

    Var softmax_rows_impl(Var a, const Mat<S>* additive_mask) {
        Mat<S> z = val(a);
        if (additive_mask) {
            if (additive_mask->rows() != z.rows() || additive_mask->cols() != z.cols()) {
                throw UsageError("softmax_rows_masked: mask shape mismatch");
            }
            z += *additive_mask;
        }
        Mat<S> value(z.rows(), z.cols());
        for (int i = 0; i < z.rows(); ++i) {
            const S m = z.row(i).maxCoeff();
            if (!(m > -std::numeric_limits<S>::infinity())) {
                throw UsageError("softmax: fully masked row");
            }
            const auto e = (z.row(i).array() - m).exp();
            value.row(i) = (e / e.sum()).matrix();
        }
        Var out = make_node(std::move(value));
        nodes_[out].back = [this, a, out] {
            const Mat<S>& Y = val(out);
            const Mat<S>& G = grad_ref(out);
            Mat<S> inner = (G.array() * Y.array()).rowwise().sum().matrix();
            grad_ref(a).array() +=
                Y.array() * (G.array().colwise() - inner.col(0).array());
        };
        return out;
    }

    std::vector<Node> nodes_;
};

inline Im2ColPlan make_conv3x3_plan(int height, int width, int stride) {
    Im2ColPlan plan;
    plan.in_rows = height * width;
    const int oh = conv_out_size(height, stride);
    const int ow = conv_out_size(width, stride);
    plan.out_rows = oh * ow;
    plan.taps = 9;
    plan.gather.resize(static_cast<size_t>(plan.out_rows) * 9, -1);
    for (int vo = 0; vo < oh; ++vo) {
        for (int uo = 0; uo < ow; ++uo) {
            const int r = vo * ow + uo;
            for (int ki = 0; ki < 3; ++ki) {
                for (int kj = 0; kj < 3; ++kj) {
                    const int vi = vo * stride - 1 + ki;
                    const int ui = uo * stride - 1 + kj;
                    if (vi >= 0 && vi < height && ui >= 0 && ui < width) {
                        plan.gather[static_cast<size_t>(r) * 9 + ki * 3 + kj] = vi * width + ui;
                    }
                }
            }
        }
    }
    return plan;
}

}  // namespace p2d::ad
