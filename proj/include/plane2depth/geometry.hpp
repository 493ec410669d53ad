#pragma once

#include "plane2depth/types.hpp"

namespace p2d {

// Default threshold on |N·K⁻¹p̃| below which a ray counts as parallel to the plane.
inline constexpr double kDenomEpsilon = 1e-8;

// Depths computed from plane coefficients are clamped into [kDepthFloor, max_depth].
inline constexpr double kDepthFloor = 1e-3;

// Unnormalized ray through pixel (u, v): ((u-cx)/fx, (v-cy)/fy, 1).
Vec3 pixel_ray(double u, double v, const CameraIntrinsics& K);

// X = d · pixel_ray(p, K). Throws std::domain_error for d <= 0.
Vec3 backproject(double u, double v, double depth, const CameraIntrinsics& K);

// Inverse of backproject; returns (u, v, depth). Throws std::domain_error if X.z <= 0.
Vec3 project(const Vec3& X, const CameraIntrinsics& K);

enum class RayPlaneStatus {
    kHit,
    kParallel,      // |n·ray| <= denom_eps
    kBehindCamera,  // intersection at non-positive depth
};

// Depth at which `ray` meets the plane (unit normal n, origin distance t > 0).
// No normalization or sign checks; the caller owns the conventions.
RayPlaneStatus intersect_ray_plane(const Vec3& normal, double distance, const Vec3& ray,
                                   double& depth_out, double denom_eps = kDenomEpsilon);

// D = t / (n · pixel_ray). Requires ‖n‖ = 1 within 1e-6 and t > 0 (std::domain_error
// otherwise). Parallel rays and intersections behind the camera also throw.
double plane_to_depth(const Vec3& normal, double distance, double u, double v,
                      const CameraIntrinsics& K, double denom_eps = kDenomEpsilon);

// Per-pixel plane_to_depth over whole maps. Pixels that are invalid in either input,
// parallel, or behind the camera come out invalid; depths are clamped to
// [kDepthFloor, max_depth]. Throws UsageError on shape/validity-shape mismatch.
DepthMap depth_map_from_plane_fields(const NormalMap& normals, const DistanceMap& distances,
                                     const CameraIntrinsics& K, double max_depth,
                                     double denom_eps = kDenomEpsilon);

struct DerivedPlaneFields {
    NormalMap normals;
    DistanceMap distances;
    int degenerate_pixels = 0;  // cross product below 1e-12, marked invalid
    int clipped_distances = 0;  // T > max_depth clipped to max_depth
};

// Ground-truth normals/distances from a depth map: central differences of
// back-projected points (one-sided at image borders), cross product, unit
// normalization, sign chosen so N·X > 0, T = N·X. A pixel is invalid if any
// stencil neighbor is invalid or the cross product degenerates.
DerivedPlaneFields derive_gt_normal_distance(const DepthMap& depth, const CameraIntrinsics& K);

}  // namespace p2d
