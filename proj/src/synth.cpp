#include "plane2depth/synth.hpp"

#include "plane2depth/geometry.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace p2d::synth {

const char* texture_kind_name(TextureKind kind) {
    switch (kind) {
        case TextureKind::kFlat: return "flat";
        case TextureKind::kStripes: return "stripes";
        case TextureKind::kChecker: return "checker";
        case TextureKind::kSplit: return "split";
    }
    return "flat";
}

TextureKind texture_kind_from_name(const std::string& name) {
    if (name == "flat") return TextureKind::kFlat;
    if (name == "stripes") return TextureKind::kStripes;
    if (name == "checker") return TextureKind::kChecker;
    if (name == "split") return TextureKind::kSplit;
    throw UsageError("unknown texture kind: " + name);
}

void GenerationParams::validate() const {
    if (width < 8 || height < 8) throw ConfigError("scene size must be at least 8x8");
    if (!(max_depth > 0)) throw ConfigError("max_depth must be positive");
    if (!(fov_deg > 10.0 && fov_deg < 150.0)) throw ConfigError("fov_deg must be in (10, 150)");
    if (min_panels < 0 || max_panels < min_panels) throw ConfigError("invalid panel count range");
    if (deception_frac < 0.0 || deception_frac > 1.0)
        throw ConfigError("deception_frac must be in [0, 1]");
    if (!(room_half_width_min > 0) || room_half_width_max < room_half_width_min)
        throw ConfigError("invalid room width range");
    if (!(room_half_height_min > 0) || room_half_height_max < room_half_height_min)
        throw ConfigError("invalid room height range");
    if (!(far_wall_min > 0) || !(far_wall_max_frac * max_depth > far_wall_min))
        throw ConfigError("far wall range is empty; raise max_depth or lower far_wall_min");
    if (max_tilt_deg < 0.0 || max_tilt_deg > 80.0)
        throw ConfigError("max_tilt_deg must be in [0, 80]");
    if (!(stripe_period_min > 0) || stripe_period_max < stripe_period_min)
        throw ConfigError("invalid stripe period range");
}

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int uniform_int(Rng& rng, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

Vec3 random_color(Rng& rng) {
    return {uniform(rng, 0.08, 0.92), uniform(rng, 0.08, 0.92), uniform(rng, 0.08, 0.92)};
}

// Orthonormal in-plane basis, rotated by a random phase so texture orientation varies.
void make_plane_basis(const Vec3& n, double phase, Vec3& e1, Vec3& e2) {
    const Vec3 up = std::abs(n.y()) < 0.9 ? Vec3(0, 1, 0) : Vec3(1, 0, 0);
    Vec3 a = up.cross(n).normalized();
    Vec3 b = n.cross(a);
    e1 = std::cos(phase) * a + std::sin(phase) * b;
    e2 = n.cross(e1);
}

Texture sample_texture(Rng& rng, const GenerationParams& params) {
    Texture tex;
    const double kind_draw = uniform(rng, 0.0, 1.0);
    if (kind_draw < params.deception_frac) {
        tex.kind = TextureKind::kSplit;
    } else {
        const double sub = uniform(rng, 0.0, 1.0);
        tex.kind = sub < 0.4 ? TextureKind::kChecker
                 : sub < 0.8 ? TextureKind::kStripes
                             : TextureKind::kFlat;
    }
    tex.color_a = random_color(rng);
    tex.color_b = random_color(rng);
    if (tex.kind == TextureKind::kSplit) {
        for (int attempt = 0; attempt < 16; ++attempt) {
            if ((tex.color_a - tex.color_b).cwiseAbs().sum() >= 0.6) break;
            tex.color_b = random_color(rng);
        }
    }
    tex.period = uniform(rng, params.stripe_period_min, params.stripe_period_max);
    return tex;
}

struct Hit {
    int plane = -1;
    double depth = 0.0;
    Vec2 local = Vec2::Zero();
};

bool inside_convex_polygon(const std::vector<Vec2>& poly, const Vec2& p) {
    const size_t n = poly.size();
    double sign = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[(i + 1) % n];
        const double cross = (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
        if (std::abs(cross) < 1e-12) continue;
        if (sign == 0.0) {
            sign = cross;
        } else if (sign * cross < 0.0) {
            return false;
        }
    }
    return true;
}

Hit trace(const SceneSpec& scene, const Vec3& ray) {
    Hit best;
    for (size_t i = 0; i < scene.planes.size(); ++i) {
        const PlanePrimitive& plane = scene.planes[i];
        double d = 0.0;
        if (intersect_ray_plane(plane.normal, plane.distance, ray, d) != RayPlaneStatus::kHit) {
            continue;
        }
        if (d > scene.max_depth) continue;
        if (best.plane >= 0 && d >= best.depth) continue;
        const Vec3 X = d * ray;
        const Vec3 rel = X - plane.distance * plane.normal;
        const Vec2 local(rel.dot(plane.basis_u), rel.dot(plane.basis_v));
        if (!plane.polygon.empty() && !inside_convex_polygon(plane.polygon, local)) {
            continue;
        }
        best.plane = static_cast<int>(i);
        best.depth = d;
        best.local = local;
    }
    return best;
}

Vec3 sample_color(const Texture& tex, const Vec2& local) {
    const Vec2 rel = local - tex.anchor;
    switch (tex.kind) {
        case TextureKind::kFlat:
            return tex.color_a;
        case TextureKind::kStripes: {
            const long long band = static_cast<long long>(std::floor(rel.x() / tex.period));
            return (band & 1) ? tex.color_b : tex.color_a;
        }
        case TextureKind::kChecker: {
            const long long bu = static_cast<long long>(std::floor(rel.x() / tex.period));
            const long long bv = static_cast<long long>(std::floor(rel.y() / tex.period));
            return ((bu + bv) & 1) ? tex.color_b : tex.color_a;
        }
        case TextureKind::kSplit:
            return rel.x() < 0.0 ? tex.color_a : tex.color_b;
    }
    return tex.color_a;
}

}  // namespace

int trace_pixel(const SceneSpec& scene, double u, double v, double& depth_out) {
    const Hit hit = trace(scene, pixel_ray(u, v, scene.intrinsics));
    if (hit.plane >= 0) depth_out = hit.depth;
    return hit.plane;
}

SceneSpec generate_scene(std::uint64_t seed, const GenerationParams& params) {
    params.validate();
    Rng rng(seed);

    SceneSpec scene;
    scene.rng_seed = seed;
    scene.width = params.width;
    scene.height = params.height;
    scene.max_depth = params.max_depth;

    const double half_fov = params.fov_deg * std::numbers::pi / 360.0;
    const double f = (params.width / 2.0) / std::tan(half_fov);
    scene.intrinsics = {f, f, (params.width - 1) / 2.0, (params.height - 1) / 2.0};

    // Room faces; the far wall catches every forward ray, so the room is closed.
    const double left = uniform(rng, params.room_half_width_min, params.room_half_width_max);
    const double right = uniform(rng, params.room_half_width_min, params.room_half_width_max);
    const double ceiling = uniform(rng, params.room_half_height_min, params.room_half_height_max);
    const double floor_d = uniform(rng, params.room_half_height_min, params.room_half_height_max);
    const double far_wall =
        uniform(rng, params.far_wall_min, params.far_wall_max_frac * params.max_depth);

    const Vec3 face_normals[5] = {
        {-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, 1}};
    const double face_distances[5] = {left, right, ceiling, floor_d, far_wall};
    for (int i = 0; i < 5; ++i) {
        PlanePrimitive plane;
        plane.normal = face_normals[i];
        plane.distance = face_distances[i];
        plane.plane_id = i;
        make_plane_basis(plane.normal, uniform(rng, 0.0, 2.0 * std::numbers::pi),
                         plane.basis_u, plane.basis_v);
        scene.planes.push_back(plane);
    }

    const int panel_count = uniform_int(rng, params.min_panels, params.max_panels);
    const double max_tilt = params.max_tilt_deg * std::numbers::pi / 180.0;
    for (int p = 0; p < panel_count; ++p) {
        PlanePrimitive panel;
        panel.plane_id = 5 + p;
        bool placed = false;
        for (int attempt = 0; attempt < 8 && !placed; ++attempt) {
            const double tilt = uniform(rng, 0.0, max_tilt);
            const double azimuth = uniform(rng, 0.0, 2.0 * std::numbers::pi);
            const Vec3 n(std::sin(tilt) * std::cos(azimuth), std::sin(tilt) * std::sin(azimuth),
                         std::cos(tilt));
            const Vec3 center(uniform(rng, -0.6 * left, 0.6 * right),
                              uniform(rng, -0.6 * ceiling, 0.6 * floor_d),
                              uniform(rng, 1.5, std::max(1.6, 0.75 * far_wall)));
            const double t = n.dot(center);
            if (t < 0.3) continue;
            panel.normal = n;
            panel.distance = t;
            make_plane_basis(n, uniform(rng, 0.0, 2.0 * std::numbers::pi), panel.basis_u,
                             panel.basis_v);
            const Vec3 rel = center - t * n;
            const Vec2 c(rel.dot(panel.basis_u), rel.dot(panel.basis_v));
            const int verts = uniform_int(rng, 3, 6);
            const double radius = uniform(rng, 0.35, 0.8);
            const double phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
            panel.polygon.clear();
            for (int k = 0; k < verts; ++k) {
                const double a = phase + 2.0 * std::numbers::pi * k / verts;
                panel.polygon.emplace_back(c.x() + radius * std::cos(a),
                                           c.y() + radius * std::sin(a));
            }
            placed = true;
        }
        if (placed) scene.planes.push_back(panel);
    }

    for (auto& plane : scene.planes) {
        plane.texture = sample_texture(rng, params);
    }

    // Anchor textures at the centroid of each plane's visible region so split
    // boundaries actually cross the rendered pixels.
    std::vector<Vec2> sums(scene.planes.size(), Vec2::Zero());
    std::vector<int> counts(scene.planes.size(), 0);
    for (int v = 0; v < scene.height; ++v) {
        for (int u = 0; u < scene.width; ++u) {
            const Hit hit = trace(scene, pixel_ray(u, v, scene.intrinsics));
            if (hit.plane >= 0) {
                sums[hit.plane] += hit.local;
                ++counts[hit.plane];
            }
        }
    }
    for (size_t i = 0; i < scene.planes.size(); ++i) {
        if (counts[i] > 0) {
            scene.planes[i].texture.anchor = sums[i] / counts[i];
        }
    }
    return scene;
}

RenderedSample render(const SceneSpec& scene) {
    if (scene.width <= 0 || scene.height <= 0 || scene.planes.empty()) {
        throw UsageError("render: scene must have positive size and at least one plane");
    }
    scene.intrinsics.validate(scene.width, scene.height);

    RenderedSample out;
    out.rgb = Grid<Vec3>(scene.height, scene.width, Vec3::Zero());
    out.depth = DepthMap(scene.height, scene.width, scene.max_depth);
    out.normal = NormalMap(scene.height, scene.width);
    out.distance = DistanceMap(scene.height, scene.width);
    out.plane_id = Grid<int>(scene.height, scene.width, -1);

    for (int v = 0; v < scene.height; ++v) {
        for (int u = 0; u < scene.width; ++u) {
            const Hit hit = trace(scene, pixel_ray(u, v, scene.intrinsics));
            if (hit.plane < 0) {
                ++out.miss_count;
                continue;
            }
            const PlanePrimitive& plane = scene.planes[hit.plane];
            out.rgb(v, u) = sample_color(plane.texture, hit.local);
            out.depth.values(v, u) = hit.depth;
            out.depth.valid(v, u) = 1;
            out.normal.vectors(v, u) = plane.normal;
            out.normal.valid(v, u) = 1;
            out.distance.values(v, u) = plane.distance;
            out.distance.valid(v, u) = 1;
            out.plane_id(v, u) = plane.plane_id;
        }
    }
    return out;
}

}  // namespace p2d::synth
