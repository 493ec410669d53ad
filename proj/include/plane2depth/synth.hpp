#pragma once

#include "plane2depth/types.hpp"

#include <cstdint>
#include <vector>

namespace p2d::synth {

enum class TextureKind { kFlat, kStripes, kChecker, kSplit };

const char* texture_kind_name(TextureKind kind);
TextureKind texture_kind_from_name(const std::string& name);

struct Texture {
    TextureKind kind = TextureKind::kFlat;
    Vec3 color_a = Vec3(0.5, 0.5, 0.5);
    Vec3 color_b = Vec3(0.5, 0.5, 0.5);
    double period = 0.5;   // meters, stripes/checker
    Vec2 anchor = Vec2::Zero();  // plane coordinates of the split boundary / pattern origin
};

// One piecewise-planar primitive. Plane coordinates are (basis_u, basis_v) about the
// foot point distance·normal; an empty polygon means infinite extent.
struct PlanePrimitive {
    Vec3 normal = Vec3(0, 0, 1);  // unit, oriented so normal·X > 0 on the plane
    double distance = 1.0;        // > 0, meters
    std::vector<Vec2> polygon;    // convex, in plane coordinates; empty = infinite
    int plane_id = 0;
    Texture texture;
    Vec3 basis_u = Vec3(1, 0, 0);
    Vec3 basis_v = Vec3(0, 1, 0);
};

struct SceneSpec {
    CameraIntrinsics intrinsics;
    int width = 0;
    int height = 0;
    std::vector<PlanePrimitive> planes;
    double max_depth = 10.0;
    std::uint64_t rng_seed = 0;
};

struct GenerationParams {
    int width = 64;
    int height = 64;
    double max_depth = 10.0;
    double fov_deg = 65.0;
    int min_panels = 0;
    int max_panels = 3;
    double deception_frac = 0.35;  // fraction of planes textured with a color split
    double room_half_width_min = 1.2;
    double room_half_width_max = 3.2;
    // kept narrow: the near-constant ceiling-to-floor extent is the scene
    // family's absolute scale anchor, as room height is for indoor datasets
    double room_half_height_min = 1.25;
    double room_half_height_max = 1.35;
    double far_wall_min = 3.5;
    double far_wall_max_frac = 0.8;  // far wall distance <= frac * max_depth
    double max_tilt_deg = 60.0;
    double stripe_period_min = 0.3;
    double stripe_period_max = 0.7;

    void validate() const;  // throws ConfigError
};

struct RenderedSample {
    Grid<Vec3> rgb;  // [0,1]
    DepthMap depth;
    NormalMap normal;
    DistanceMap distance;
    Grid<int> plane_id;  // -1 where no hit
    int miss_count = 0;
};

// Deterministic in (seed, params): a closed axis-aligned room (5 visible faces)
// plus 0..max interior convex panels with tilted normals; split-color textures are
// anchored at the centroid of each plane's visible region so both sides show up.
SceneSpec generate_scene(std::uint64_t seed, const GenerationParams& params = {});

// Analytic render: per pixel the nearest positive ray-plane hit within max_depth wins
// and supplies exact normal/distance/depth plus the sampled texture color.
RenderedSample render(const SceneSpec& scene);

// Nearest hit for a single pixel; returns plane index or -1. Exposed for tests.
int trace_pixel(const SceneSpec& scene, double u, double v, double& depth_out);

}  // namespace p2d::synth
