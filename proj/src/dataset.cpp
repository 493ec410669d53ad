#include "plane2depth/dataset.hpp"

#include "plane2depth/pfm.hpp"
#include "plane2depth/png_io.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace p2d {

namespace {

json intrinsics_to_json(const CameraIntrinsics& K) {
    return json{{"fx", K.fx}, {"fy", K.fy}, {"cx", K.cx}, {"cy", K.cy}};
}

CameraIntrinsics intrinsics_from_json(const json& j) {
    return {j.at("fx").get<double>(), j.at("fy").get<double>(), j.at("cx").get<double>(),
            j.at("cy").get<double>()};
}

json params_to_json(const synth::GenerationParams& p) {
    return json{{"width", p.width},
                {"height", p.height},
                {"max_depth", p.max_depth},
                {"fov_deg", p.fov_deg},
                {"min_panels", p.min_panels},
                {"max_panels", p.max_panels},
                {"deception_frac", p.deception_frac},
                {"room_half_width_min", p.room_half_width_min},
                {"room_half_width_max", p.room_half_width_max},
                {"room_half_height_min", p.room_half_height_min},
                {"room_half_height_max", p.room_half_height_max},
                {"far_wall_min", p.far_wall_min},
                {"far_wall_max_frac", p.far_wall_max_frac},
                {"max_tilt_deg", p.max_tilt_deg},
                {"stripe_period_min", p.stripe_period_min},
                {"stripe_period_max", p.stripe_period_max}};
}

synth::GenerationParams params_from_json(const json& j) {
    synth::GenerationParams p;
    p.width = j.value("width", p.width);
    p.height = j.value("height", p.height);
    p.max_depth = j.value("max_depth", p.max_depth);
    p.fov_deg = j.value("fov_deg", p.fov_deg);
    p.min_panels = j.value("min_panels", p.min_panels);
    p.max_panels = j.value("max_panels", p.max_panels);
    p.deception_frac = j.value("deception_frac", p.deception_frac);
    p.room_half_width_min = j.value("room_half_width_min", p.room_half_width_min);
    p.room_half_width_max = j.value("room_half_width_max", p.room_half_width_max);
    p.room_half_height_min = j.value("room_half_height_min", p.room_half_height_min);
    p.room_half_height_max = j.value("room_half_height_max", p.room_half_height_max);
    p.far_wall_min = j.value("far_wall_min", p.far_wall_min);
    p.far_wall_max_frac = j.value("far_wall_max_frac", p.far_wall_max_frac);
    p.max_tilt_deg = j.value("max_tilt_deg", p.max_tilt_deg);
    p.stripe_period_min = j.value("stripe_period_min", p.stripe_period_min);
    p.stripe_period_max = j.value("stripe_period_max", p.stripe_period_max);
    return p;
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError("malformed JSON in " + path + ": " + e.what());
    }
    return j;
}

Grid<float> channel_from_normals(const NormalMap& n, int c) {
    Grid<float> g(n.vectors.height(), n.vectors.width(), 0.0f);
    for (size_t i = 0; i < g.size(); ++i) {
        g[i] = n.valid[i] ? static_cast<float>(n.vectors[i][c]) : 0.0f;
    }
    return g;
}

}  // namespace

std::string sample_dir_name(std::uint64_t seed) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "sample_%08llu", static_cast<unsigned long long>(seed));
    return buf;
}

void write_sample(const std::string& dir, const synth::SceneSpec& scene,
                  const synth::RenderedSample& rendered) {
    fs::create_directories(dir);
    write_png_rgb8(dir + "/rgb.png", quantize_rgb(rendered.rgb));

    Grid<float> depth(rendered.depth.values.height(), rendered.depth.values.width(), 0.0f);
    for (size_t i = 0; i < depth.size(); ++i) {
        depth[i] = rendered.depth.valid[i] ? static_cast<float>(rendered.depth.values[i]) : 0.0f;
    }
    write_pfm(dir + "/depth.pfm", depth);
    write_pfm(dir + "/normal_x.pfm", channel_from_normals(rendered.normal, 0));
    write_pfm(dir + "/normal_y.pfm", channel_from_normals(rendered.normal, 1));
    write_pfm(dir + "/normal_z.pfm", channel_from_normals(rendered.normal, 2));

    Grid<float> dist(rendered.distance.values.height(), rendered.distance.values.width(), 0.0f);
    for (size_t i = 0; i < dist.size(); ++i) {
        dist[i] = rendered.distance.valid[i] ? static_cast<float>(rendered.distance.values[i]) : 0.0f;
    }
    write_pfm(dir + "/distance.pfm", dist);

    json planes = json::array();
    for (const auto& plane : scene.planes) {
        planes.push_back(json{{"id", plane.plane_id},
                              {"texture", synth::texture_kind_name(plane.texture.kind)},
                              {"normal", {plane.normal.x(), plane.normal.y(), plane.normal.z()}},
                              {"distance", plane.distance}});
    }
    json meta{{"seed", scene.rng_seed},
              {"width", scene.width},
              {"height", scene.height},
              {"max_depth", scene.max_depth},
              {"intrinsics", intrinsics_to_json(scene.intrinsics)},
              {"plane_count", scene.planes.size()},
              {"planes", planes},
              {"miss_count", rendered.miss_count}};
    std::ofstream out(dir + "/meta.json");
    if (!out) throw IoError("cannot open for writing: " + dir + "/meta.json");
    out << meta.dump(2) << "\n";
}

StoredSample read_sample(const std::string& dir) {
    StoredSample s;
    const json meta = load_json_file(dir + "/meta.json");
    try {
        s.seed = meta.at("seed").get<std::uint64_t>();
        s.max_depth = meta.at("max_depth").get<double>();
        s.intrinsics = intrinsics_from_json(meta.at("intrinsics"));
        s.plane_count = meta.at("plane_count").get<int>();
    } catch (const json::exception& e) {
        throw IoError("malformed meta.json in " + dir + ": " + e.what());
    }

    s.rgb = dequantize_rgb(read_png_rgb8(dir + "/rgb.png"));
    const Grid<float> depth = read_pfm(dir + "/depth.pfm");
    const Grid<float> nx = read_pfm(dir + "/normal_x.pfm");
    const Grid<float> ny = read_pfm(dir + "/normal_y.pfm");
    const Grid<float> nz = read_pfm(dir + "/normal_z.pfm");
    const Grid<float> dist = read_pfm(dir + "/distance.pfm");
    if (!depth.same_shape(nx) || !depth.same_shape(dist) ||
        depth.height() != s.rgb.height() || depth.width() != s.rgb.width()) {
        throw IoError("channel shape mismatch in sample " + dir);
    }

    const int h = depth.height(), w = depth.width();
    s.depth = DepthMap(h, w, s.max_depth);
    s.normal = NormalMap(h, w);
    s.distance = DistanceMap(h, w);
    for (size_t i = 0; i < depth.size(); ++i) {
        if (depth[i] > 0.0f) {
            s.depth.values[i] = depth[i];
            s.depth.valid[i] = 1;
            s.normal.vectors[i] = Vec3(nx[i], ny[i], nz[i]);
            s.normal.valid[i] = 1;
            s.distance.values[i] = dist[i];
            s.distance.valid[i] = 1;
        }
    }
    return s;
}

int generate_dataset(const std::string& out_dir, int count, std::uint64_t base_seed,
                     const synth::GenerationParams& params) {
    if (count <= 0) throw ConfigError("dataset count must be positive");
    params.validate();
    fs::create_directories(out_dir);

    int total_misses = 0;
    json entries = json::array();
    for (int i = 0; i < count; ++i) {
        const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(i);
        const synth::SceneSpec scene = synth::generate_scene(seed, params);
        const synth::RenderedSample rendered = synth::render(scene);
        total_misses += rendered.miss_count;
        const std::string dir_name = sample_dir_name(seed);
        write_sample(out_dir + "/" + dir_name, scene, rendered);
        entries.push_back(json{{"dir", dir_name}, {"seed", seed}});
    }

    json manifest{{"count", count},
                  {"width", params.width},
                  {"height", params.height},
                  {"base_seed", base_seed},
                  {"params", params_to_json(params)},
                  {"samples", entries}};
    std::ofstream out(out_dir + "/manifest.json");
    if (!out) throw IoError("cannot open for writing: " + out_dir + "/manifest.json");
    out << manifest.dump(2) << "\n";
    return total_misses;
}

DatasetManifest read_manifest(const std::string& dataset_dir) {
    const json j = load_json_file(dataset_dir + "/manifest.json");
    DatasetManifest m;
    try {
        m.count = j.at("count").get<int>();
        m.width = j.at("width").get<int>();
        m.height = j.at("height").get<int>();
        m.base_seed = j.value("base_seed", std::uint64_t{0});
        if (j.contains("params")) m.params = params_from_json(j.at("params"));
        for (const auto& e : j.at("samples")) {
            m.samples.push_back({e.at("dir").get<std::string>(), e.at("seed").get<std::uint64_t>()});
        }
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed manifest.json: ") + e.what());
    }
    if (static_cast<int>(m.samples.size()) != m.count) {
        throw IoError("manifest count does not match its sample list");
    }
    return m;
}

std::vector<StoredSample> read_dataset(const std::string& dataset_dir) {
    const DatasetManifest manifest = read_manifest(dataset_dir);
    std::vector<StoredSample> samples;
    samples.reserve(manifest.samples.size());
    for (const auto& entry : manifest.samples) {
        samples.push_back(read_sample(dataset_dir + "/" + entry.dir));
    }
    return samples;
}

}  // namespace p2d
