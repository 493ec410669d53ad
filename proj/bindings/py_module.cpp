#include "plane2depth/dataset.hpp"
#include "plane2depth/geometry.hpp"
#include "plane2depth/metrics.hpp"
#include "plane2depth/network.hpp"
#include "plane2depth/objectives.hpp"
#include "plane2depth/synth.hpp"
#include "plane2depth/trainer.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

namespace py = pybind11;
using namespace p2d;

namespace {

using ArrayD = py::array_t<double, py::array::c_style | py::array::forcecast>;
using ArrayU8 = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

Grid<double> grid_from_array(const ArrayD& a) {
    if (a.ndim() != 2) throw UsageError("expected a 2-d array");
    Grid<double> g(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
    std::copy(a.data(), a.data() + a.size(), g.data());
    return g;
}

Mask mask_from_array(const ArrayU8& a) {
    if (a.ndim() != 2) throw UsageError("expected a 2-d mask");
    Mask m(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
    std::copy(a.data(), a.data() + a.size(), m.data());
    return m;
}

py::array_t<double> array_from_grid(const Grid<double>& g) {
    py::array_t<double> a({g.height(), g.width()});
    std::copy(g.data(), g.data() + g.size(), a.mutable_data());
    return a;
}

py::array_t<std::uint8_t> array_from_mask(const Mask& m) {
    py::array_t<std::uint8_t> a({m.height(), m.width()});
    std::copy(m.data(), m.data() + m.size(), a.mutable_data());
    return a;
}

py::array_t<double> array_from_vec3_grid(const Grid<Vec3>& g) {
    py::array_t<double> a({g.height(), g.width(), 3});
    auto r = a.mutable_unchecked<3>();
    for (int v = 0; v < g.height(); ++v) {
        for (int u = 0; u < g.width(); ++u) {
            for (int c = 0; c < 3; ++c) r(v, u, c) = g(v, u)[c];
        }
    }
    return a;
}

DepthMap depth_from_arrays(const ArrayD& values, const ArrayU8& valid, double max_depth) {
    DepthMap m;
    m.values = grid_from_array(values);
    m.valid = mask_from_array(valid);
    m.max_depth = max_depth;
    if (!m.values.same_shape(m.valid)) throw UsageError("values/valid shape mismatch");
    return m;
}

NormalMap normals_from_arrays(const ArrayD& vectors, const ArrayU8& valid) {
    if (vectors.ndim() != 3 || vectors.shape(2) != 3) {
        throw UsageError("normals must be HxWx3");
    }
    NormalMap m(static_cast<int>(vectors.shape(0)), static_cast<int>(vectors.shape(1)));
    auto r = vectors.unchecked<3>();
    for (int v = 0; v < m.vectors.height(); ++v) {
        for (int u = 0; u < m.vectors.width(); ++u) {
            m.vectors(v, u) = Vec3(r(v, u, 0), r(v, u, 1), r(v, u, 2));
        }
    }
    m.valid = mask_from_array(valid);
    if (!m.vectors.same_shape(m.valid)) throw UsageError("vectors/valid shape mismatch");
    return m;
}

DistanceMap distances_from_arrays(const ArrayD& values, const ArrayU8& valid) {
    DistanceMap m;
    m.values = grid_from_array(values);
    m.valid = mask_from_array(valid);
    if (!m.values.same_shape(m.valid)) throw UsageError("values/valid shape mismatch");
    return m;
}

py::dict render_to_dict(const synth::SceneSpec& scene, const synth::RenderedSample& sample) {
    py::dict out;
    out["rgb"] = array_from_vec3_grid(sample.rgb);
    out["depth"] = array_from_grid(sample.depth.values);
    out["normal"] = array_from_vec3_grid(sample.normal.vectors);
    out["distance"] = array_from_grid(sample.distance.values);
    out["valid"] = array_from_mask(sample.depth.valid);
    py::array_t<int> ids({sample.plane_id.height(), sample.plane_id.width()});
    std::copy(sample.plane_id.data(), sample.plane_id.data() + sample.plane_id.size(),
              ids.mutable_data());
    out["plane_id"] = ids;
    out["miss_count"] = sample.miss_count;
    out["max_depth"] = scene.max_depth;
    py::dict K;
    K["fx"] = scene.intrinsics.fx;
    K["fy"] = scene.intrinsics.fy;
    K["cx"] = scene.intrinsics.cx;
    K["cy"] = scene.intrinsics.cy;
    out["intrinsics"] = K;
    return out;
}

py::dict report_to_dict(const MetricReport& r) {
    py::dict d;
    d["abs_rel"] = r.abs_rel;
    d["sq_rel"] = r.sq_rel;
    d["rmse"] = r.rmse;
    d["rmse_log"] = r.rmse_log;
    d["log10"] = r.log10;
    d["delta1"] = r.delta1;
    d["delta2"] = r.delta2;
    d["delta3"] = r.delta3;
    d["valid_pixel_count"] = r.valid_pixel_count;
    d["clamped_predictions"] = r.clamped_predictions;
    return d;
}

// float64 network for interactive use; heavier training stays in the CLI.
class PyPlaneNet {
public:
    PyPlaneNet(int queries, int channels, int query_dim, int layers_per_scale, int heads,
               bool af_modulators, double max_depth, std::uint64_t seed) {
        net::NetConfig cfg;
        cfg.queries = queries;
        cfg.channels = channels;
        cfg.query_dim = query_dim;
        cfg.layers_per_scale = layers_per_scale;
        cfg.heads = heads;
        cfg.af_modulators = af_modulators;
        cfg.max_depth = max_depth;
        net_ = std::make_unique<net::PlaneNet<double>>(cfg, seed);
    }

    explicit PyPlaneNet(const std::string& checkpoint_base) {
        const CheckpointMeta meta = read_checkpoint_meta(checkpoint_base);
        net_ = std::make_unique<net::PlaneNet<double>>(meta.config, std::uint64_t{0});
        load_params_from_tensors(net_->params(), read_checkpoint_tensors(checkpoint_base));
    }

    py::dict forward(const ArrayD& rgb, double fx, double fy, double cx, double cy) const {
        if (rgb.ndim() != 3 || rgb.shape(2) != 3) throw UsageError("image must be HxWx3");
        const int h = static_cast<int>(rgb.shape(0));
        const int w = static_cast<int>(rgb.shape(1));
        ad::Mat<double> image(static_cast<long>(h) * w, 3);
        auto r = rgb.unchecked<3>();
        for (int v = 0; v < h; ++v) {
            for (int u = 0; u < w; ++u) {
                for (int c = 0; c < 3; ++c) image(static_cast<long>(v) * w + u, c) = r(v, u, c);
            }
        }
        const auto out = net_->forward(image, h, w, CameraIntrinsics{fx, fy, cx, cy});

        auto to_img = [&](const ad::Mat<double>& m, int hh, int ww) {
            py::array_t<double> a({hh, ww, static_cast<int>(m.cols())});
            auto wv = a.mutable_unchecked<3>();
            for (int v = 0; v < hh; ++v) {
                for (int u = 0; u < ww; ++u) {
                    for (int c = 0; c < m.cols(); ++c) {
                        wv(v, u, c) = m(static_cast<long>(v) * ww + u, c);
                    }
                }
            }
            return a;
        };
        py::dict d;
        d["depth"] = to_img(out.depth_full, out.height, out.width);
        d["normal"] = to_img(out.normals_full, out.height, out.width);
        d["distance"] = to_img(out.distance_full, out.height, out.width);
        d["depth_s4"] = to_img(out.layers.back().depth, out.grid_h, out.grid_w);
        d["assignment_s4"] = to_img(out.layers.back().assignment, out.grid_h, out.grid_w);
        d["layers"] = static_cast<int>(out.layers.size());
        return d;
    }

    size_t parameter_count() const { return net_->params().scalar_count(); }

private:
    std::unique_ptr<net::PlaneNet<double>> net_;
};

}  // namespace

PYBIND11_MODULE(_plane2depth, m) {
    m.doc() = "plane-query monocular depth toolkit";

    py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_IOError);

    py::class_<CameraIntrinsics>(m, "CameraIntrinsics")
        .def(py::init([](double fx, double fy, double cx, double cy) {
                 return CameraIntrinsics{fx, fy, cx, cy};
             }),
             py::arg("fx"), py::arg("fy"), py::arg("cx"), py::arg("cy"))
        .def_readwrite("fx", &CameraIntrinsics::fx)
        .def_readwrite("fy", &CameraIntrinsics::fy)
        .def_readwrite("cx", &CameraIntrinsics::cx)
        .def_readwrite("cy", &CameraIntrinsics::cy);

    m.def(
        "pixel_ray",
        [](double u, double v, const CameraIntrinsics& K) {
            const Vec3 r = pixel_ray(u, v, K);
            return py::make_tuple(r.x(), r.y(), r.z());
        },
        py::arg("u"), py::arg("v"), py::arg("K"));

    m.def(
        "backproject",
        [](double u, double v, double depth, const CameraIntrinsics& K) {
            const Vec3 x = backproject(u, v, depth, K);
            return py::make_tuple(x.x(), x.y(), x.z());
        },
        py::arg("u"), py::arg("v"), py::arg("depth"), py::arg("K"));

    m.def(
        "plane_to_depth",
        [](py::sequence normal, double distance, double u, double v, const CameraIntrinsics& K) {
            const Vec3 n(normal[0].cast<double>(), normal[1].cast<double>(),
                         normal[2].cast<double>());
            return plane_to_depth(n, distance, u, v, K);
        },
        py::arg("normal"), py::arg("distance"), py::arg("u"), py::arg("v"), py::arg("K"));

    m.def(
        "depth_from_plane_fields",
        [](const ArrayD& normals, const ArrayU8& n_valid, const ArrayD& distances,
           const ArrayU8& d_valid, const CameraIntrinsics& K, double max_depth) {
            const DepthMap out = depth_map_from_plane_fields(
                normals_from_arrays(normals, n_valid), distances_from_arrays(distances, d_valid),
                K, max_depth);
            return py::make_tuple(array_from_grid(out.values), array_from_mask(out.valid));
        },
        py::arg("normals"), py::arg("normals_valid"), py::arg("distances"),
        py::arg("distances_valid"), py::arg("K"), py::arg("max_depth"));

    m.def(
        "derive_gt_normal_distance",
        [](const ArrayD& depth, const ArrayU8& valid, const CameraIntrinsics& K,
           double max_depth) {
            const DerivedPlaneFields out =
                derive_gt_normal_distance(depth_from_arrays(depth, valid, max_depth), K);
            py::dict d;
            d["normal"] = array_from_vec3_grid(out.normals.vectors);
            d["normal_valid"] = array_from_mask(out.normals.valid);
            d["distance"] = array_from_grid(out.distances.values);
            d["distance_valid"] = array_from_mask(out.distances.valid);
            d["degenerate_pixels"] = out.degenerate_pixels;
            d["clipped_distances"] = out.clipped_distances;
            return d;
        },
        py::arg("depth"), py::arg("valid"), py::arg("K"), py::arg("max_depth"));

    py::class_<synth::GenerationParams>(m, "GenerationParams")
        .def(py::init<>())
        .def_readwrite("width", &synth::GenerationParams::width)
        .def_readwrite("height", &synth::GenerationParams::height)
        .def_readwrite("max_depth", &synth::GenerationParams::max_depth)
        .def_readwrite("fov_deg", &synth::GenerationParams::fov_deg)
        .def_readwrite("min_panels", &synth::GenerationParams::min_panels)
        .def_readwrite("max_panels", &synth::GenerationParams::max_panels)
        .def_readwrite("deception_frac", &synth::GenerationParams::deception_frac);

    m.def(
        "render_scene",
        [](std::uint64_t seed, int width, int height, double max_depth, double deception_frac,
           int min_panels, int max_panels) {
            synth::GenerationParams params;
            params.width = width;
            params.height = height;
            params.max_depth = max_depth;
            params.deception_frac = deception_frac;
            params.min_panels = min_panels;
            params.max_panels = max_panels;
            const auto scene = synth::generate_scene(seed, params);
            return render_to_dict(scene, synth::render(scene));
        },
        py::arg("seed"), py::arg("width") = 64, py::arg("height") = 64,
        py::arg("max_depth") = 10.0, py::arg("deception_frac") = 0.35, py::arg("min_panels") = 0,
        py::arg("max_panels") = 3);

    m.def("generate_dataset", &generate_dataset, py::arg("out_dir"), py::arg("count"),
          py::arg("base_seed"), py::arg("params") = synth::GenerationParams{});

    m.def(
        "si_loss",
        [](const ArrayD& pred, const ArrayU8& pv, const ArrayD& gt, const ArrayU8& gv,
           double lambda) {
            return si_loss(depth_from_arrays(pred, pv, 1e9), depth_from_arrays(gt, gv, 1e9),
                           lambda);
        },
        py::arg("pred"), py::arg("pred_valid"), py::arg("gt"), py::arg("gt_valid"),
        py::arg("lambda_") = 0.15);

    m.def(
        "normal_loss",
        [](const ArrayD& pred, const ArrayU8& pv, const ArrayD& gt, const ArrayU8& gv) {
            return normal_loss(normals_from_arrays(pred, pv), normals_from_arrays(gt, gv));
        },
        py::arg("pred"), py::arg("pred_valid"), py::arg("gt"), py::arg("gt_valid"));

    m.def(
        "distance_loss",
        [](const ArrayD& pred, const ArrayU8& pv, const ArrayD& gt, const ArrayU8& gv) {
            return distance_loss(distances_from_arrays(pred, pv), distances_from_arrays(gt, gv));
        },
        py::arg("pred"), py::arg("pred_valid"), py::arg("gt"), py::arg("gt_valid"));

    m.def(
        "evaluate",
        [](const ArrayD& pred, const ArrayU8& pv, const ArrayD& gt, const ArrayU8& gv,
           double cap) {
            return report_to_dict(
                evaluate(depth_from_arrays(pred, pv, cap), depth_from_arrays(gt, gv, cap), cap));
        },
        py::arg("pred"), py::arg("pred_valid"), py::arg("gt"), py::arg("gt_valid"),
        py::arg("cap"));

    py::class_<PyPlaneNet>(m, "PlaneNet")
        .def(py::init<int, int, int, int, int, bool, double, std::uint64_t>(),
             py::arg("queries") = 64, py::arg("channels") = 64, py::arg("query_dim") = 64,
             py::arg("layers_per_scale") = 1, py::arg("heads") = 1,
             py::arg("af_modulators") = true, py::arg("max_depth") = 10.0, py::arg("seed") = 0)
        .def(py::init<const std::string&>(), py::arg("checkpoint_base"))
        .def("forward", &PyPlaneNet::forward, py::arg("rgb"), py::arg("fx"), py::arg("fy"),
             py::arg("cx"), py::arg("cy"))
        .def("parameter_count", &PyPlaneNet::parameter_count);
}
