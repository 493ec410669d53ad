#include "plane2depth/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace p2d {

Vec3 pixel_ray(double u, double v, const CameraIntrinsics& K) {
    return {(u - K.cx) / K.fx, (v - K.cy) / K.fy, 1.0};
}

Vec3 backproject(double u, double v, double depth, const CameraIntrinsics& K) {
    if (!(depth > 0.0)) {
        throw std::domain_error("backproject: depth must be positive");
    }
    return depth * pixel_ray(u, v, K);
}

Vec3 project(const Vec3& X, const CameraIntrinsics& K) {
    if (!(X.z() > 0.0)) {
        throw std::domain_error("project: point must be in front of the camera");
    }
    return {K.fx * X.x() / X.z() + K.cx, K.fy * X.y() / X.z() + K.cy, X.z()};
}

RayPlaneStatus intersect_ray_plane(const Vec3& normal, double distance, const Vec3& ray,
                                   double& depth_out, double denom_eps) {
    const double denom = normal.dot(ray);
    if (std::abs(denom) <= denom_eps) {
        return RayPlaneStatus::kParallel;
    }
    const double d = distance / denom;
    if (d <= 0.0) {
        return RayPlaneStatus::kBehindCamera;
    }
    depth_out = d;
    return RayPlaneStatus::kHit;
}

double plane_to_depth(const Vec3& normal, double distance, double u, double v,
                      const CameraIntrinsics& K, double denom_eps) {
    if (std::abs(normal.norm() - 1.0) > 1e-6) {
        throw std::domain_error("plane_to_depth: normal must be unit length");
    }
    if (!(distance > 0.0)) {
        throw std::domain_error("plane_to_depth: distance must be positive");
    }
    double depth = 0.0;
    switch (intersect_ray_plane(normal, distance, pixel_ray(u, v, K), depth, denom_eps)) {
        case RayPlaneStatus::kParallel:
            throw std::domain_error("plane_to_depth: ray parallel to plane");
        case RayPlaneStatus::kBehindCamera:
            throw std::domain_error("plane_to_depth: plane behind camera");
        case RayPlaneStatus::kHit:
            break;
    }
    return depth;
}

DepthMap depth_map_from_plane_fields(const NormalMap& normals, const DistanceMap& distances,
                                     const CameraIntrinsics& K, double max_depth,
                                     double denom_eps) {
    if (!normals.vectors.same_shape(distances.values) ||
        !normals.valid.same_shape(distances.valid)) {
        throw UsageError("depth_map_from_plane_fields: normal/distance shape mismatch");
    }
    const int h = normals.vectors.height();
    const int w = normals.vectors.width();
    DepthMap out(h, w, max_depth);
    for (int v = 0; v < h; ++v) {
        for (int u = 0; u < w; ++u) {
            if (!normals.valid(v, u) || !distances.valid(v, u)) {
                continue;
            }
            double d = 0.0;
            const auto status = intersect_ray_plane(normals.vectors(v, u), distances.values(v, u),
                                                    pixel_ray(u, v, K), d, denom_eps);
            if (status != RayPlaneStatus::kHit) {
                continue;
            }
            out.values(v, u) = std::min(std::max(d, kDepthFloor), max_depth);
            out.valid(v, u) = 1;
        }
    }
    return out;
}

namespace {

// Difference of back-projected points along one image axis. Returns false when the
// stencil leaves the image or touches an invalid pixel.
bool point_delta(const DepthMap& depth, const CameraIntrinsics& K, int v, int u, int dv, int du,
                 Vec3& delta) {
    const int h = depth.values.height();
    const int w = depth.values.width();
    const int va = v + dv, ua = u + du;
    const int vb = v - dv, ub = u - du;
    const bool fwd_ok = va >= 0 && va < h && ua >= 0 && ua < w;
    const bool bwd_ok = vb >= 0 && vb < h && ub >= 0 && ub < w;

    auto point = [&](int vv, int uu) -> Vec3 {
        return depth.values(vv, uu) * pixel_ray(uu, vv, K);
    };

    if (fwd_ok && bwd_ok) {
        if (!depth.valid(va, ua) || !depth.valid(vb, ub)) return false;
        delta = point(va, ua) - point(vb, ub);
        return true;
    }
    if (fwd_ok) {
        if (!depth.valid(va, ua) || !depth.valid(v, u)) return false;
        delta = point(va, ua) - point(v, u);
        return true;
    }
    if (bwd_ok) {
        if (!depth.valid(vb, ub) || !depth.valid(v, u)) return false;
        delta = point(v, u) - point(vb, ub);
        return true;
    }
    return false;
}

}  // namespace

DerivedPlaneFields derive_gt_normal_distance(const DepthMap& depth, const CameraIntrinsics& K) {
    const int h = depth.values.height();
    const int w = depth.values.width();
    DerivedPlaneFields out;
    out.normals = NormalMap(h, w);
    out.distances = DistanceMap(h, w);

    for (int v = 0; v < h; ++v) {
        for (int u = 0; u < w; ++u) {
            if (!depth.valid(v, u)) continue;

            Vec3 du_vec, dv_vec;
            if (!point_delta(depth, K, v, u, 0, 1, du_vec) ||
                !point_delta(depth, K, v, u, 1, 0, dv_vec)) {
                continue;
            }
            Vec3 n = du_vec.cross(dv_vec);
            const double len = n.norm();
            if (len < 1e-12) {
                ++out.degenerate_pixels;
                continue;
            }
            n /= len;
            const Vec3 X = depth.values(v, u) * pixel_ray(u, v, K);
            double t = n.dot(X);
            if (t < 0.0) {
                n = -n;
                t = -t;
            }
            if (!(t > 0.0)) {
                ++out.degenerate_pixels;
                continue;
            }
            if (t > depth.max_depth) {
                t = depth.max_depth;
                ++out.clipped_distances;
            }
            out.normals.vectors(v, u) = n;
            out.normals.valid(v, u) = 1;
            out.distances.values(v, u) = t;
            out.distances.valid(v, u) = 1;
        }
    }
    return out;
}

}  // namespace p2d
