#include "plane2depth/trainer.hpp"

#include "plane2depth/colormap.hpp"
#include "plane2depth/geometry.hpp"
#include "plane2depth/objectives.hpp"
#include "plane2depth/pfm.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>

namespace fs = std::filesystem;
using nlohmann::json;

namespace p2d {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t x = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

template <typename S>
struct PreppedSample {
    ad::Mat<S> image;  // [HW×3]
    CoarseGt<S> gt;
    CameraIntrinsics intrinsics;
};

// Builds the network input and the stride-4 supervision grid for one stored
// sample; `flip` mirrors horizontally and negates the normal x component.
template <typename S>
PreppedSample<S> prep_sample(const StoredSample& s, bool flip) {
    const int h = s.depth.values.height();
    const int w = s.depth.values.width();
    PreppedSample<S> out;
    out.intrinsics = s.intrinsics;

    out.image.resize(static_cast<long>(h) * w, 3);
    for (int v = 0; v < h; ++v) {
        for (int u = 0; u < w; ++u) {
            const Vec3& c = s.rgb(v, flip ? w - 1 - u : u);
            out.image.row(static_cast<long>(v) * w + u) << S(c.x()), S(c.y()), S(c.z());
        }
    }

    const int gh = h / 4, gw = w / 4;
    CoarseGt<S>& gt = out.gt;
    gt.depth = ad::Mat<S>::Zero(gh * gw, 1);
    gt.log_depth = ad::Mat<S>::Zero(gh * gw, 1);
    gt.normals = ad::Mat<S>::Zero(gh * gw, 3);
    gt.distance = ad::Mat<S>::Zero(gh * gw, 1);
    gt.valid = ad::Mat<S>::Zero(gh * gw, 1);
    for (int i = 0; i < gh; ++i) {
        for (int j = 0; j < gw; ++j) {
            const int va = net::coarse_anchor(i, 4, h);
            const int ua_net = net::coarse_anchor(j, 4, w);
            const int ua = flip ? w - 1 - ua_net : ua_net;
            if (!s.depth.valid(va, ua)) continue;
            const long r = static_cast<long>(i) * gw + j;
            const double d = s.depth.values(va, ua);
            gt.depth(r, 0) = S(d);
            gt.log_depth(r, 0) = S(std::log(d));
            const Vec3& n = s.normal.vectors(va, ua);
            gt.normals.row(r) << S(flip ? -n.x() : n.x()), S(n.y()), S(n.z());
            gt.distance(r, 0) = S(s.distance.values(va, ua));
            gt.valid(r, 0) = S(1);
            ++gt.valid_count;
        }
    }
    return out;
}

template <typename S>
class Adam {
public:
    Adam(const net::ParamStore<S>& params, double beta1, double beta2)
        : beta1_(S(beta1)), beta2_(S(beta2)) {
        m_.reserve(params.count());
        v_.reserve(params.count());
        for (const auto& p : params.values) {
            m_.push_back(ad::Mat<S>::Zero(p.rows(), p.cols()));
            v_.push_back(ad::Mat<S>::Zero(p.rows(), p.cols()));
        }
    }

    void step(net::ParamStore<S>& params, const std::vector<ad::Mat<S>>& grads, double lr) {
        ++t_;
        const S bc1 = S(1) - std::pow(beta1_, S(t_));
        const S bc2 = S(1) - std::pow(beta2_, S(t_));
        for (size_t i = 0; i < params.count(); ++i) {
            m_[i] = beta1_ * m_[i] + (S(1) - beta1_) * grads[i];
            v_[i] = (beta2_ * v_[i].array() + (S(1) - beta2_) * grads[i].array().square()).matrix();
            params.values[i].array() -=
                S(lr) * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + S(1e-8));
        }
    }

    long step_count() const { return t_; }
    void set_step_count(long t) { t_ = t; }
    std::vector<ad::Mat<S>>& first_moments() { return m_; }
    std::vector<ad::Mat<S>>& second_moments() { return v_; }

private:
    S beta1_, beta2_;
    long t_ = 0;
    std::vector<ad::Mat<S>> m_;
    std::vector<ad::Mat<S>> v_;
};

template <typename S>
void save_state(const std::string& base, const net::PlaneNet<S>& net, Adam<S>& adam,
                long iteration, const std::string& dtype, std::uint64_t seed) {
    RawTensors tensors = params_to_tensors(net.params());
    const auto& names = net.params().names;
    for (size_t i = 0; i < names.size(); ++i) {
        tensors.entries.emplace_back("adam.m." + names[i],
                                     adam.first_moments()[i].template cast<double>());
        tensors.entries.emplace_back("adam.v." + names[i],
                                     adam.second_moments()[i].template cast<double>());
    }
    CheckpointMeta meta;
    meta.config = net.config();
    meta.iteration = iteration;
    meta.dtype = dtype;
    meta.has_optimizer = true;
    meta.adam_step = adam.step_count();
    meta.train_seed = seed;
    write_checkpoint(base, meta, tensors);
}

template <typename S>
TrainResult train_impl(const RunConfig& cfg, const std::string& resume_base) {
    const auto manifest = read_manifest(cfg.dataset_dir);
    if (manifest.width != cfg.image_width || manifest.height != cfg.image_height) {
        throw ConfigError("image size: config does not match dataset manifest");
    }
    const std::vector<StoredSample> stored = read_dataset(cfg.dataset_dir);
    if (stored.empty()) throw ConfigError("dataset_dir: dataset is empty");
    const double max_depth = stored.front().max_depth;

    std::vector<PreppedSample<S>> plain, flipped;
    plain.reserve(stored.size());
    flipped.reserve(stored.size());
    for (const auto& s : stored) {
        plain.push_back(prep_sample<S>(s, false));
        if (cfg.flip_augmentation) flipped.push_back(prep_sample<S>(s, true));
    }

    net::PlaneNet<S> net(cfg.net_config(max_depth), cfg.seed);
    Adam<S> adam(net.params(), cfg.beta1, cfg.beta2);
    long start_iteration = 0;
    if (!resume_base.empty()) {
        const CheckpointMeta meta = read_checkpoint_meta(resume_base);
        if (!(meta.config == net.config())) {
            throw ConfigError("resume checkpoint architecture does not match the config");
        }
        const RawTensors tensors = read_checkpoint_tensors(resume_base);
        load_params_from_tensors(net.params(), tensors);
        if (meta.has_optimizer) {
            const auto& names = net.params().names;
            for (size_t i = 0; i < names.size(); ++i) {
                const Eigen::MatrixXd* m = tensors.find("adam.m." + names[i]);
                const Eigen::MatrixXd* v = tensors.find("adam.v." + names[i]);
                if (m && v) {
                    adam.first_moments()[i] = m->cast<S>();
                    adam.second_moments()[i] = v->cast<S>();
                }
            }
            adam.set_step_count(meta.adam_step);
        }
        start_iteration = meta.iteration;
    }

    fs::create_directories(cfg.output_dir);
    std::ofstream log(cfg.output_dir + "/train_log.jsonl",
                      resume_base.empty() ? std::ios::trunc : std::ios::app);
    if (!log) throw IoError("cannot open training log in " + cfg.output_dir);

    const auto t0 = std::chrono::steady_clock::now();
    TrainResult result;
    for (long iter = start_iteration + 1; iter <= cfg.iterations; ++iter) {
        std::mt19937_64 rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(iter)));
        std::uniform_int_distribution<size_t> pick(0, plain.size() - 1);
        std::uniform_int_distribution<int> coin(0, 1);

        ad::Tape<S> tape;
        const std::vector<ad::Var> pv = net.register_params(tape);
        ad::Var batch_loss = -1;
        double si = 0, nl = 0, dl = 0;
        std::vector<size_t> batch_indices;
        double loss_value = std::numeric_limits<double>::quiet_NaN();
        std::string batch_error;
        try {
            for (int b = 0; b < cfg.batch_size; ++b) {
                const size_t idx = pick(rng);
                const bool flip = cfg.flip_augmentation && coin(rng) == 1;
                batch_indices.push_back(idx);
                const PreppedSample<S>& sample = flip ? flipped[idx] : plain[idx];
                const auto fw = net.forward_tape(tape, pv, sample.image, cfg.image_height,
                                                 cfg.image_width, sample.intrinsics);
                const LossTerms<S> terms =
                    total_loss_tape(tape, fw, sample.gt, cfg.weights, cfg.supervise_all_layers);
                si += terms.si;
                nl += terms.normal;
                dl += terms.distance;
                batch_loss = batch_loss < 0 ? terms.total : tape.add(batch_loss, terms.total);
            }
            batch_loss = tape.scale(batch_loss, S(1.0 / cfg.batch_size));
            loss_value = static_cast<double>(tape.val(batch_loss)(0, 0));
        } catch (const std::exception& e) {
            batch_error = e.what();
        }
        if (!std::isfinite(loss_value)) {
            json dump{{"iteration", iter},
                      {"batch_indices", batch_indices},
                      {"loss", loss_value},
                      {"error", batch_error}};
            std::ofstream d(cfg.output_dir + "/nan_dump.json");
            d << dump.dump(2) << "\n";
            throw TrainError("non-finite loss at iteration " + std::to_string(iter) +
                             "; batch dumped to nan_dump.json");
        }

        tape.backward(batch_loss);
        std::vector<ad::Mat<S>> grads;
        grads.reserve(pv.size());
        for (ad::Var v : pv) grads.push_back(tape.grad(v));

        double lr = cfg.learning_rate;
        if (cfg.lr_linear_decay) {
            lr *= 1.0 - static_cast<double>(iter - 1) / static_cast<double>(cfg.iterations);
        }
        adam.step(net.params(), grads, lr);

        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        json line{{"iteration", iter},
                  {"loss", loss_value},
                  {"si", si / cfg.batch_size},
                  {"normal", nl / cfg.batch_size},
                  {"distance", dl / cfg.batch_size},
                  {"lr", lr},
                  {"elapsed_s", elapsed}};
        log << line.dump() << "\n";
        log.flush();

        result.final_loss = loss_value;
        result.iterations_run = iter;
        if (iter % cfg.checkpoint_interval == 0 && iter != cfg.iterations) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "checkpoint_%08ld", iter);
            save_state(cfg.output_dir + "/" + std::string(buf), net, adam, iter, cfg.dtype,
                       cfg.seed);
        }
    }

    result.checkpoint_base = cfg.output_dir + "/checkpoint_final";
    save_state(result.checkpoint_base, net, adam,
               std::max(start_iteration, result.iterations_run), cfg.dtype, cfg.seed);
    return result;
}

template <typename S>
Predictor make_predictor(const CheckpointMeta& meta, const RawTensors& tensors) {
    auto net = std::make_shared<net::PlaneNet<S>>(meta.config, std::uint64_t{0});
    load_params_from_tensors(net->params(), tensors);

    Predictor p;
    p.config = meta.config;
    p.dtype = meta.dtype;
    p.iteration = meta.iteration;
    p.run = [net](const Grid<Vec3>& rgb, const CameraIntrinsics& K,
                  double max_depth) -> PredictedMaps {
        const int h = rgb.height(), w = rgb.width();
        ad::Mat<S> image(static_cast<long>(h) * w, 3);
        for (int v = 0; v < h; ++v) {
            for (int u = 0; u < w; ++u) {
                const Vec3& c = rgb(v, u);
                image.row(static_cast<long>(v) * w + u) << S(c.x()), S(c.y()), S(c.z());
            }
        }
        const net::NetworkOutput<S> out = net->forward(image, h, w, K);

        PredictedMaps maps;
        maps.depth = DepthMap(h, w, max_depth);
        maps.normals = NormalMap(h, w);
        maps.distance = DistanceMap(h, w);
        for (int v = 0; v < h; ++v) {
            for (int u = 0; u < w; ++u) {
                const long r = static_cast<long>(v) * w + u;
                maps.depth.values(v, u) = static_cast<double>(out.depth_full(r, 0));
                maps.depth.valid(v, u) = 1;
                maps.normals.vectors(v, u) =
                    Vec3(out.normals_full(r, 0), out.normals_full(r, 1), out.normals_full(r, 2));
                maps.normals.valid(v, u) = 1;
                maps.distance.values(v, u) = static_cast<double>(out.distance_full(r, 0));
                maps.distance.valid(v, u) = 1;
            }
        }
        return maps;
    };
    return p;
}

}  // namespace

TrainResult train(const RunConfig& cfg, const std::string& resume_base) {
    cfg.validate();
    if (cfg.dtype == "float64") return train_impl<double>(cfg, resume_base);
    return train_impl<float>(cfg, resume_base);
}

Predictor load_predictor(const std::string& checkpoint_base) {
    const CheckpointMeta meta = read_checkpoint_meta(checkpoint_base);
    const RawTensors tensors = read_checkpoint_tensors(checkpoint_base);
    if (meta.dtype == "float64") return make_predictor<double>(meta, tensors);
    return make_predictor<float>(meta, tensors);
}

EvalResult evaluate_dataset(const Predictor* pred, const std::string& dataset_dir,
                            const EvalOptions& opts) {
    if (!pred && !opts.oracle_gt_planes) {
        throw UsageError("evaluate_dataset: predictor required unless oracle mode");
    }
    const DatasetManifest manifest = read_manifest(dataset_dir);
    if (opts.export_maps && opts.export_dir.empty()) {
        throw UsageError("evaluate_dataset: export_maps needs an export_dir");
    }
    if (opts.export_maps) fs::create_directories(opts.export_dir);

    EvalResult result;
    for (const auto& entry : manifest.samples) {
        const StoredSample s = read_sample(dataset_dir + "/" + entry.dir);
        DepthMap prediction;
        if (opts.oracle_gt_planes) {
            prediction =
                depth_map_from_plane_fields(s.normal, s.distance, s.intrinsics, s.max_depth);
        } else {
            prediction = pred->run(s.rgb, s.intrinsics, s.max_depth).depth;
        }
        result.names.push_back(entry.dir);
        result.per_image.push_back(evaluate(prediction, s.depth, s.max_depth));

        if (opts.export_maps) {
            const std::string base = opts.export_dir + "/" + entry.dir;
            write_pfm(base + "_depth.pfm", to_float_grid(prediction.values));
            write_png_rgb8(base + "_depth.png",
                           colorize_map(prediction.values, prediction.valid, s.max_depth,
                                        rainbow_color));
            Grid<double> err(prediction.values.height(), prediction.values.width(), 0.0);
            Mask err_valid(err.height(), err.width(), 0);
            for (size_t i = 0; i < err.size(); ++i) {
                if (prediction.valid[i] && s.depth.valid[i]) {
                    err[i] = std::abs(prediction.values[i] - s.depth.values[i]);
                    err_valid[i] = 1;
                }
            }
            write_png_rgb8(base + "_error.png",
                           colorize_map(err, err_valid, opts.error_cap, coolwarm_color));
        }
    }
    result.aggregate = aggregate(result.per_image);
    return result;
}

}  // namespace p2d
