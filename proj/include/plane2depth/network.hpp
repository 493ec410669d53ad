#pragma once

#include "plane2depth/autodiff.hpp"
#include "plane2depth/geometry.hpp"
#include "plane2depth/types.hpp"

#include <algorithm>
#include <random>
#include <string>
#include <vector>

namespace p2d::net {

struct NetConfig {
    int queries = 64;         // L plane queries
    int channels = 64;        // C, common feature width after projection
    int query_dim = 64;       // D_q, query embedding width
    int layers_per_scale = 1; // 3 interaction scales -> 3 * layers_per_scale layers
    int heads = 1;
    bool af_modulators = true;
    double max_depth = 10.0;

    int total_layers() const { return 3 * layers_per_scale; }

    void validate() const {
        if (queries < 1) throw ConfigError("queries must be >= 1");
        if (channels < 4) throw ConfigError("channels must be >= 4");
        if (query_dim < 4) throw ConfigError("query_dim must be >= 4");
        if (heads < 1 || query_dim % heads != 0) {
            throw ConfigError("heads must divide query_dim");
        }
        if (layers_per_scale < 0 || layers_per_scale > 4) {
            throw ConfigError("layers_per_scale must be in [0, 4]");
        }
        if (!(max_depth > 0)) throw ConfigError("max_depth must be positive");
    }

    bool operator==(const NetConfig&) const = default;
};

template <typename S>
struct ParamStore {
    std::vector<std::string> names;
    std::vector<ad::Mat<S>> values;

    int add(std::string name, ad::Mat<S> value) {
        names.push_back(std::move(name));
        values.push_back(std::move(value));
        return static_cast<int>(values.size()) - 1;
    }

    int index_of(const std::string& name) const {
        for (size_t i = 0; i < names.size(); ++i) {
            if (names[i] == name) return static_cast<int>(i);
        }
        throw UsageError("unknown parameter: " + name);
    }

    size_t count() const { return values.size(); }

    size_t scalar_count() const {
        size_t n = 0;
        for (const auto& v : values) n += static_cast<size_t>(v.size());
        return n;
    }
};

// Nearest full-resolution pixel backing coarse cell i at the given stride.
inline int coarse_anchor(int i, int stride, int full_size) {
    return std::min(full_size - 1, i * stride + stride / 2);
}

// Rays at the stride-4 anchor pixels, one row per coarse cell.
template <typename S>
ad::Mat<S> make_coarse_rays(const CameraIntrinsics& K, int height, int width, int grid_h,
                            int grid_w) {
    ad::Mat<S> rays(grid_h * grid_w, 3);
    for (int i = 0; i < grid_h; ++i) {
        for (int j = 0; j < grid_w; ++j) {
            const Vec3 r = pixel_ray(coarse_anchor(j, 4, width), coarse_anchor(i, 4, height), K);
            rays.row(i * grid_w + j) << S(r.x()), S(r.y()), S(r.z());
        }
    }
    return rays;
}

// Bilinear upsample of a coarse [hc*wc × ch] grid whose samples sit at full-res
// coordinates i*stride + stride/2.
template <typename S>
ad::Mat<S> upsample_bilinear(const ad::Mat<S>& coarse, int hc, int wc, int height, int width,
                             int stride) {
    if (coarse.rows() != hc * wc) throw UsageError("upsample_bilinear: row count mismatch");
    const double offset = stride / 2;
    ad::Mat<S> out(height * width, coarse.cols());
    for (int v = 0; v < height; ++v) {
        const double y = (v - offset) / stride;
        int i0 = static_cast<int>(std::floor(y));
        double ty = y - i0;
        i0 = std::clamp(i0, 0, hc - 1);
        const int i1 = std::min(i0 + 1, hc - 1);
        ty = std::clamp(ty, 0.0, 1.0);
        for (int u = 0; u < width; ++u) {
            const double x = (u - offset) / stride;
            int j0 = static_cast<int>(std::floor(x));
            double tx = x - j0;
            j0 = std::clamp(j0, 0, wc - 1);
            const int j1 = std::min(j0 + 1, wc - 1);
            tx = std::clamp(tx, 0.0, 1.0);
            out.row(v * width + u) =
                (coarse.row(i0 * wc + j0) * S((1 - ty) * (1 - tx)) +
                 coarse.row(i0 * wc + j1) * S((1 - ty) * tx) +
                 coarse.row(i1 * wc + j0) * S(ty * (1 - tx)) +
                 coarse.row(i1 * wc + j1) * S(ty * tx));
        }
    }
    return out;
}

template <typename S>
struct LayerVars {
    ad::Var queries = -1;         // [L×Dq]
    ad::Var plane_features = -1;  // E, [L×C]
    ad::Var basis_normals = -1;   // [L×3], unit rows
    ad::Var basis_logits = -1;    // T_raw, [L×1]
    ad::Var assignment = -1;      // [HW4×L], rows sum to 1 (S transposed)
    ad::Var normals = -1;         // [HW4×3], unit rows
    ad::Var distance = -1;        // [HW4×1], in (0, max_depth)
    ad::Var depth = -1;           // [HW4×1], in [depth floor, max_depth]
};

template <typename S>
struct ForwardVars {
    int grid_h = 0;  // stride-4 grid
    int grid_w = 0;
    std::vector<LayerVars<S>> layers;
    int degenerate_basis_normals = 0;
    int degenerate_pixel_normals = 0;
};

template <typename S>
struct NetworkMaps {
    ad::Mat<S> normals;     // [HW4×3]
    ad::Mat<S> distance;    // [HW4×1]
    ad::Mat<S> depth;       // [HW4×1]
    ad::Mat<S> assignment;  // [HW4×L]
};

template <typename S>
struct NetworkOutput {
    int height = 0;
    int width = 0;
    int grid_h = 0;
    int grid_w = 0;
    std::vector<NetworkMaps<S>> layers;
    ad::Mat<S> depth_full;     // [HW×1]
    ad::Mat<S> normals_full;   // [HW×3], renormalized after interpolation
    ad::Mat<S> distance_full;  // [HW×1]
    int degenerate_basis_normals = 0;
    int degenerate_pixel_normals = 0;
};

// Plane-query depth network: a strided conv encoder feeding a hierarchical
// masked-attention decoder over plane queries, decoded into plane bases whose
// softmax-weighted mixture gives per-pixel plane coefficients and, through the
// pinhole model, metric depth.
template <typename S>
class PlaneNet {
public:
    struct LinearIdx {
        int w = -1, b = -1;
    };
    struct NormIdx {
        int g = -1, b = -1;
    };
    struct AttentionIdx {
        NormIdx ln;
        LinearIdx q, k, v, o;
    };
    struct FfnIdx {
        NormIdx ln;
        LinearIdx fc1, fc2;
    };
    struct TransformerLayerIdx {
        AttentionIdx cross, self_attn;
        FfnIdx ffn;
    };
    struct AfmIdx {
        LinearIdx q, k, v;
    };
    struct MlpIdx {
        LinearIdx fc1, fc2;
    };

    PlaneNet(NetConfig cfg, std::uint64_t init_seed) : cfg_(cfg) {
        cfg_.validate();
        std::mt19937_64 rng(init_seed);
        build_params(rng);
    }

    const NetConfig& config() const { return cfg_; }
    ParamStore<S>& params() { return params_; }
    const ParamStore<S>& params() const { return params_; }

    std::vector<ad::Var> register_params(ad::Tape<S>& tape) const {
        std::vector<ad::Var> vars;
        vars.reserve(params_.count());
        for (const auto& v : params_.values) vars.push_back(tape.leaf(v));
        return vars;
    }

    // Image rows are pixels in row-major order, columns r,g,b in [0,1].
    // Height and width must be multiples of 4; multiples of 32 give the exact
    // stride-{4,8,16,32} pyramid (smaller inputs saturate the deep grids at 1x1).
    ForwardVars<S> forward_tape(ad::Tape<S>& tape, const std::vector<ad::Var>& pv,
                                const ad::Mat<S>& image, int height, int width,
                                const CameraIntrinsics& K) const {
        if (image.rows() != static_cast<long>(height) * width || image.cols() != 3) {
            throw UsageError("forward: image must be [H*W x 3]");
        }
        if (height % 4 != 0 || width % 4 != 0 || height < 4 || width < 4) {
            throw UsageError("forward: input size must be a positive multiple of 4");
        }
        K.validate(width, height);

        Backbone bb = backbone(tape, pv, image, height, width);
        ForwardVars<S> out;
        out.grid_h = bb.feat_h[0];
        out.grid_w = bb.feat_w[0];

        const ad::Mat<S> rays = make_coarse_rays<S>(K, height, width, out.grid_h, out.grid_w);
        const int grid4 = out.grid_h * out.grid_w;
        ad::Var f_sim = bb.feat[0];

        ad::Var queries = pv[queries_idx_];
        ad::Mat<S> mask = ad::Mat<S>::Ones(cfg_.queries, grid4);

        auto decode = [&](ad::Var q) {
            LayerVars<S> layer;
            layer.queries = q;
            pgdg_heads_tape(tape, pv, q, layer, &out.degenerate_basis_normals);
            ad::Var logits = tape.matmul(f_sim, layer.plane_features, false, true);
            layer.assignment = tape.softmax_rows(logits);
            assemble_maps_tape(tape, layer, rays, &out.degenerate_pixel_normals);
            out.layers.push_back(layer);
            mask = predict_mask_from_logits(ad::Mat<S>(tape.val(logits).transpose()));
        };

        if (cfg_.layers_per_scale == 0) {
            decode(queries);  // APQA bypassed: initial queries straight to the generator
            return out;
        }

        for (int scale = 0; scale < 3; ++scale) {
            const int feat_slot = 3 - scale;  // coarse to fine: strides 32, 16, 8
            ad::Var feats = bb.feat[feat_slot];
            if (cfg_.af_modulators && scale > 0) {
                feats = af_modulate_tape(tape, pv, scale - 1, feats, queries);
            }
            for (int rep = 0; rep < cfg_.layers_per_scale; ++rep) {
                const int layer_idx = scale * cfg_.layers_per_scale + rep;
                ad::Mat<S> mask_here =
                    resample_mask_nearest(mask, out.grid_h, out.grid_w, bb.feat_h[feat_slot],
                                          bb.feat_w[feat_slot]);
                apply_empty_row_fallback(mask_here);
                queries = transformer_layer_tape(tape, pv, layer_idx, queries, feats, mask_here);
                decode(queries);
            }
        }
        return out;
    }

    NetworkOutput<S> forward(const ad::Mat<S>& image, int height, int width,
                             const CameraIntrinsics& K) const {
        ad::Tape<S> tape;
        const std::vector<ad::Var> pv = register_params(tape);
        ForwardVars<S> fw = forward_tape(tape, pv, image, height, width, K);

        NetworkOutput<S> out;
        out.height = height;
        out.width = width;
        out.grid_h = fw.grid_h;
        out.grid_w = fw.grid_w;
        out.degenerate_basis_normals = fw.degenerate_basis_normals;
        out.degenerate_pixel_normals = fw.degenerate_pixel_normals;
        for (const auto& layer : fw.layers) {
            out.layers.push_back(NetworkMaps<S>{tape.val(layer.normals), tape.val(layer.distance),
                                                tape.val(layer.depth), tape.val(layer.assignment)});
        }
        const NetworkMaps<S>& last = out.layers.back();
        out.depth_full = upsample_bilinear(last.depth, fw.grid_h, fw.grid_w, height, width, 4);
        out.distance_full =
            upsample_bilinear(last.distance, fw.grid_h, fw.grid_w, height, width, 4);
        ad::Mat<S> n = upsample_bilinear(last.normals, fw.grid_h, fw.grid_w, height, width, 4);
        for (int i = 0; i < n.rows(); ++i) {
            const S len = n.row(i).norm();
            if (len < S(1e-12)) {
                n.row(i) << S(0), S(0), S(1);
            } else {
                n.row(i) /= len;
            }
        }
        out.normals_full = std::move(n);
        return out;
    }

    // --- pieces exposed for direct testing ---

    // Eq: F̂ = softmax(Q̄ K̄ᵀ) V̄ + F with Q̄ from features, K̄/V̄ from queries.
    ad::Var af_modulate_tape(ad::Tape<S>& tape, const std::vector<ad::Var>& pv, int modulator,
                             ad::Var features, ad::Var queries) const {
        const AfmIdx& idx = afm_.at(static_cast<size_t>(modulator));
        ad::Var q = linear(tape, pv, idx.q, features);
        ad::Var k = linear(tape, pv, idx.k, queries);
        ad::Var v = linear(tape, pv, idx.v, queries);
        ad::Var attn = tape.softmax_rows(tape.matmul(q, k, false, true));
        return tape.add(tape.matmul(attn, v), features);
    }

    // Masked cross-attention, query self-attention, feed-forward; residual and
    // pre-norm on each. `mask` is binary [L × rows(features)].
    ad::Var transformer_layer_tape(ad::Tape<S>& tape, const std::vector<ad::Var>& pv,
                                   int layer_idx, ad::Var queries, ad::Var features,
                                   const ad::Mat<S>& mask) const {
        const TransformerLayerIdx& idx = layers_.at(static_cast<size_t>(layer_idx));
        const ad::Mat<S> additive = additive_mask(mask);
        ad::Var p = attention(tape, pv, idx.cross, queries, features, &additive, false);
        p = attention(tape, pv, idx.self_attn, p, p, nullptr, true);
        ad::Var x = tape.layer_norm(p, pv[idx.ffn.ln.g], pv[idx.ffn.ln.b]);
        ad::Var h = tape.gelu(linear(tape, pv, idx.ffn.fc1, x));
        return tape.add(p, linear(tape, pv, idx.ffn.fc2, h));
    }

    // Independent 2-layer MLPs for plane features, normals (unit-normalized with a
    // +z fallback), and distance logits.
    void pgdg_heads_tape(ad::Tape<S>& tape, const std::vector<ad::Var>& pv, ad::Var queries,
                         LayerVars<S>& out, int* degenerate_counter) const {
        auto mlp = [&](const MlpIdx& idx) {
            ad::Var h = tape.relu(linear(tape, pv, idx.fc1, queries));
            return linear(tape, pv, idx.fc2, h);
        };
        out.plane_features = mlp(e_head_);
        Eigen::RowVectorX<S> fallback(3);
        fallback << S(0), S(0), S(1);
        out.basis_normals =
            tape.renormalize_rows(mlp(n_head_), S(1e-12), fallback, degenerate_counter);
        out.basis_logits = mlp(t_head_);
    }

    // Mixture of plane bases per pixel: renormalized weighted normals, sigmoid-
    // bounded distance, and depth along the stored rays clamped to the valid range.
    void assemble_maps_tape(ad::Tape<S>& tape, LayerVars<S>& layer, const ad::Mat<S>& rays,
                            int* degenerate_counter) const {
        Eigen::RowVectorX<S> fallback(3);
        fallback << S(0), S(0), S(1);
        ad::Var mixed = tape.matmul(layer.assignment, layer.basis_normals);
        layer.normals = tape.renormalize_rows(mixed, S(1e-12), fallback, degenerate_counter);
        ad::Var logit = tape.matmul(layer.assignment, layer.basis_logits);
        layer.distance = tape.scale(tape.sigmoid(logit), S(cfg_.max_depth));
        ad::Var denom = tape.row_sum(tape.mul_const(layer.normals, rays));
        ad::Var raw = tape.cdiv(layer.distance, denom);
        layer.depth = tape.clamp(raw, S(kDepthFloor), S(cfg_.max_depth));
    }

    // Feature grid sizes at strides 4, 8, 16, 32 (exact when divisible by 32,
    // ceil-saturated otherwise).
    static std::array<std::pair<int, int>, 4> backbone_grid_sizes(int height, int width) {
        std::array<std::pair<int, int>, 4> out{};
        int h = height, w = width;
        for (int i = 0; i < 5; ++i) {
            h = ad::conv_out_size(h, 2);
            w = ad::conv_out_size(w, 2);
            if (i >= 1) out[static_cast<size_t>(i - 1)] = {h, w};
        }
        return out;
    }

    static ad::Mat<S> predict_mask_from_logits(const ad::Mat<S>& logits) {
        ad::Mat<S> mask = (logits.array() >= S(0)).template cast<S>().matrix();
        apply_empty_row_fallback(mask);
        return mask;
    }

    static void apply_empty_row_fallback(ad::Mat<S>& mask) {
        for (int i = 0; i < mask.rows(); ++i) {
            if (mask.row(i).maxCoeff() <= S(0)) mask.row(i).setOnes();
        }
    }

    static ad::Mat<S> resample_mask_nearest(const ad::Mat<S>& mask, int h_src, int w_src,
                                            int h_dst, int w_dst) {
        if (mask.cols() != static_cast<long>(h_src) * w_src) {
            throw UsageError("resample_mask_nearest: source shape mismatch");
        }
        ad::Mat<S> out(mask.rows(), h_dst * w_dst);
        for (int i = 0; i < h_dst; ++i) {
            const int si = std::min(h_src - 1, (2 * i + 1) * h_src / (2 * h_dst));
            for (int j = 0; j < w_dst; ++j) {
                const int sj = std::min(w_src - 1, (2 * j + 1) * w_src / (2 * w_dst));
                out.col(i * w_dst + j) = mask.col(si * w_src + sj);
            }
        }
        return out;
    }

    static ad::Mat<S> additive_mask(const ad::Mat<S>& binary) {
        const S ninf = -std::numeric_limits<S>::infinity();
        return (binary.array() > S(0)).select(ad::Mat<S>::Zero(binary.rows(), binary.cols()),
                                              ad::Mat<S>::Constant(binary.rows(), binary.cols(),
                                                                   ninf));
    }

    int num_af_modulators() const { return static_cast<int>(afm_.size()); }

private:
    struct Backbone {
        // feat[0] stride 4, feat[1] stride 8, feat[2] stride 16, feat[3] stride 32
        std::array<ad::Var, 4> feat{-1, -1, -1, -1};
        std::array<int, 4> feat_h{};
        std::array<int, 4> feat_w{};
    };

    ad::Var linear(ad::Tape<S>& tape, const std::vector<ad::Var>& pv, const LinearIdx& idx,
                   ad::Var x) const {
        return tape.add_row_bias(tape.matmul(x, pv[idx.w]), pv[idx.b]);
    }

    ad::Var attention(ad::Tape<S>& tape, const std::vector<ad::Var>& pv, const AttentionIdx& idx,
                      ad::Var target, ad::Var source, const ad::Mat<S>* additive,
                      bool self_mode) const {
        ad::Var x = tape.layer_norm(target, pv[idx.ln.g], pv[idx.ln.b]);
        ad::Var kv = self_mode ? x : source;
        ad::Var q = linear(tape, pv, idx.q, x);
        ad::Var k = linear(tape, pv, idx.k, kv);
        ad::Var v = linear(tape, pv, idx.v, kv);
        const int dh = cfg_.query_dim / cfg_.heads;
        std::vector<ad::Var> heads;
        heads.reserve(static_cast<size_t>(cfg_.heads));
        for (int h = 0; h < cfg_.heads; ++h) {
            ad::Var qh = cfg_.heads == 1 ? q : tape.slice_cols(q, h * dh, dh);
            ad::Var kh = cfg_.heads == 1 ? k : tape.slice_cols(k, h * dh, dh);
            ad::Var vh = cfg_.heads == 1 ? v : tape.slice_cols(v, h * dh, dh);
            ad::Var logits = tape.matmul(qh, kh, false, true);
            ad::Var attn = additive ? tape.softmax_rows_masked(logits, *additive)
                                    : tape.softmax_rows(logits);
            heads.push_back(tape.matmul(attn, vh));
        }
        ad::Var merged = cfg_.heads == 1 ? heads[0] : tape.concat_cols(heads);
        return tape.add(target, linear(tape, pv, idx.o, merged));
    }

    Backbone backbone(ad::Tape<S>& tape, const std::vector<ad::Var>& pv, const ad::Mat<S>& image,
                      int height, int width) const {
        // rgb scaled to [-1, 1] plus normalized pixel coordinates.
        ad::Mat<S> input(image.rows(), 5);
        input.leftCols(3) = image * S(2) - ad::Mat<S>::Ones(image.rows(), 3);
        for (int v = 0; v < height; ++v) {
            for (int u = 0; u < width; ++u) {
                input(v * width + u, 3) = width > 1 ? S(2.0 * u / (width - 1) - 1.0) : S(0);
                input(v * width + u, 4) = height > 1 ? S(2.0 * v / (height - 1) - 1.0) : S(0);
            }
        }

        Backbone bb;
        ad::Var x = tape.leaf(std::move(input));
        int h = height, w = width;
        std::array<ad::Var, 5> stage_out{};
        std::array<int, 5> stage_h{}, stage_w{};
        for (int i = 0; i < 5; ++i) {
            const ad::Im2ColPlan plan = ad::make_conv3x3_plan(h, w, 2);
            ad::Var cols = tape.im2col(x, plan);
            x = tape.relu(linear(tape, pv, convs_[static_cast<size_t>(i)], cols));
            h = ad::conv_out_size(h, 2);
            w = ad::conv_out_size(w, 2);
            stage_h[static_cast<size_t>(i)] = h;
            stage_w[static_cast<size_t>(i)] = w;
            stage_out[static_cast<size_t>(i)] = x;
        }
        for (int s = 0; s < 4; ++s) {
            const ProjIdx& proj = projs_[static_cast<size_t>(s)];
            ad::Var p = linear(tape, pv, proj.fc, stage_out[static_cast<size_t>(s + 1)]);
            bb.feat[static_cast<size_t>(s)] = tape.layer_norm(p, pv[proj.ln.g], pv[proj.ln.b]);
            bb.feat_h[static_cast<size_t>(s)] = stage_h[static_cast<size_t>(s + 1)];
            bb.feat_w[static_cast<size_t>(s)] = stage_w[static_cast<size_t>(s + 1)];
        }
        return bb;
    }

    struct ProjIdx {
        LinearIdx fc;
        NormIdx ln;
    };

    void build_params(std::mt19937_64& rng) {
        auto normal_mat = [&](int rows, int cols, double stddev) {
            std::normal_distribution<double> dist(0.0, stddev);
            ad::Mat<S> m(rows, cols);
            for (int i = 0; i < rows; ++i) {
                for (int j = 0; j < cols; ++j) m(i, j) = static_cast<S>(dist(rng));
            }
            return m;
        };
        auto add_linear = [&](const std::string& name, int in, int out) {
            LinearIdx idx;
            const double stddev = std::sqrt(2.0 / (in + out));
            idx.w = params_.add(name + ".w", normal_mat(in, out, stddev));
            idx.b = params_.add(name + ".b", ad::Mat<S>::Zero(1, out));
            return idx;
        };
        auto add_conv = [&](const std::string& name, int in, int out) {
            LinearIdx idx;
            const double stddev = std::sqrt(2.0 / (9.0 * in));
            idx.w = params_.add(name + ".w", normal_mat(9 * in, out, stddev));
            idx.b = params_.add(name + ".b", ad::Mat<S>::Zero(1, out));
            return idx;
        };
        auto add_norm = [&](const std::string& name, int dim) {
            NormIdx idx;
            idx.g = params_.add(name + ".g", ad::Mat<S>::Ones(1, dim));
            idx.b = params_.add(name + ".b", ad::Mat<S>::Zero(1, dim));
            return idx;
        };
        auto add_attention = [&](const std::string& name, int kv_dim) {
            AttentionIdx idx;
            idx.ln = add_norm(name + ".ln", cfg_.query_dim);
            idx.q = add_linear(name + ".q", cfg_.query_dim, cfg_.query_dim);
            idx.k = add_linear(name + ".k", kv_dim, cfg_.query_dim);
            idx.v = add_linear(name + ".v", kv_dim, cfg_.query_dim);
            idx.o = add_linear(name + ".o", cfg_.query_dim, cfg_.query_dim);
            return idx;
        };

        const int c = cfg_.channels;
        queries_idx_ = params_.add("queries", normal_mat(cfg_.queries, cfg_.query_dim, 0.02));

        const std::array<int, 5> widths = {std::max(8, c / 4), std::max(16, c / 2), c, c, c};
        int in_ch = 5;
        for (int i = 0; i < 5; ++i) {
            convs_[static_cast<size_t>(i)] =
                add_conv("backbone.conv" + std::to_string(i + 1), in_ch, widths[static_cast<size_t>(i)]);
            in_ch = widths[static_cast<size_t>(i)];
        }
        const std::array<int, 4> strides = {4, 8, 16, 32};
        for (int s = 0; s < 4; ++s) {
            const std::string name = "backbone.proj" + std::to_string(strides[static_cast<size_t>(s)]);
            projs_[static_cast<size_t>(s)].fc =
                add_linear(name, widths[static_cast<size_t>(s + 1)], c);
            projs_[static_cast<size_t>(s)].ln = add_norm(name + ".ln", c);
        }

        for (int l = 0; l < cfg_.total_layers(); ++l) {
            const std::string name = "apqa.layer" + std::to_string(l);
            TransformerLayerIdx idx;
            idx.cross = add_attention(name + ".cross", c);
            idx.self_attn = add_attention(name + ".self", cfg_.query_dim);
            idx.ffn.ln = add_norm(name + ".ffn.ln", cfg_.query_dim);
            idx.ffn.fc1 = add_linear(name + ".ffn.fc1", cfg_.query_dim, 2 * cfg_.query_dim);
            idx.ffn.fc2 = add_linear(name + ".ffn.fc2", 2 * cfg_.query_dim, cfg_.query_dim);
            layers_.push_back(idx);
        }

        for (int m = 0; m < 2; ++m) {
            const std::string name = "apqa.afm" + std::to_string(m + 1);
            AfmIdx idx;
            idx.q = add_linear(name + ".q", c, c);
            idx.k = add_linear(name + ".k", cfg_.query_dim, c);
            idx.v = add_linear(name + ".v", cfg_.query_dim, c);
            afm_.push_back(idx);
        }

        auto add_mlp = [&](const std::string& name, int out) {
            MlpIdx idx;
            idx.fc1 = add_linear(name + ".fc1", cfg_.query_dim, cfg_.query_dim);
            idx.fc2 = add_linear(name + ".fc2", cfg_.query_dim, out);
            return idx;
        };
        e_head_ = add_mlp("pgdg.e", c);
        n_head_ = add_mlp("pgdg.n", 3);
        t_head_ = add_mlp("pgdg.t", 1);
        // bias toward +z so Eq.7 denominators start positive
        params_.values[static_cast<size_t>(n_head_.fc2.b)](0, 2) = S(1);
    }

    NetConfig cfg_;
    ParamStore<S> params_;
    int queries_idx_ = -1;
    std::array<LinearIdx, 5> convs_{};
    std::array<ProjIdx, 4> projs_{};
    std::vector<TransformerLayerIdx> layers_;
    std::vector<AfmIdx> afm_;
    MlpIdx e_head_, n_head_, t_head_;
};

}  // namespace p2d::net
