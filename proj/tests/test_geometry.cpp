#include "plane2depth/geometry.hpp"
#include "plane2depth/synth.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace p2d;

namespace {
const CameraIntrinsics kK{100.0, 100.0, 50.0, 50.0};
}

TEST_CASE("pixel_ray maps the principal point to the optical axis") {
    const Vec3 r = pixel_ray(kK.cx, kK.cy, kK);
    CHECK(r.x() == 0.0);
    CHECK(r.y() == 0.0);
    CHECK(r.z() == 1.0);
}

TEST_CASE("pixel_ray arithmetic") {
    const Vec3 r1 = pixel_ray(150.0, 50.0, kK);
    CHECK(r1.x() == doctest::Approx(1.0));
    CHECK(r1.y() == doctest::Approx(0.0));
    CHECK(r1.z() == 1.0);

    const CameraIntrinsics k2{200.0, 100.0, 50.0, 50.0};
    const Vec3 r2 = pixel_ray(50.0, 150.0, k2);
    CHECK(r2.x() == doctest::Approx(0.0));
    CHECK(r2.y() == doctest::Approx(1.0));
    CHECK(r2.z() == 1.0);
}

TEST_CASE("backproject examples and inverse round trip") {
    const Vec3 on_axis = backproject(kK.cx, kK.cy, 3.0, kK);
    CHECK(on_axis.isApprox(Vec3(0, 0, 3)));

    const Vec3 x = backproject(150.0, 50.0, 2.0, kK);
    CHECK(x.isApprox(Vec3(2, 0, 2)));

    CHECK_THROWS_AS(backproject(10.0, 10.0, 0.0, kK), std::domain_error);
    CHECK_THROWS_AS(backproject(10.0, 10.0, -1.0, kK), std::domain_error);

    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> pix(0.0, 99.0), depth(0.1, 50.0);
    for (int i = 0; i < 200; ++i) {
        const double u = pix(rng), v = pix(rng), d = depth(rng);
        const Vec3 p = project(backproject(u, v, d, kK), kK);
        CHECK(std::abs(p.x() - u) < 1e-9);
        CHECK(std::abs(p.y() - v) < 1e-9);
        CHECK(std::abs(p.z() - d) < 1e-9);
    }
}

TEST_CASE("plane_to_depth fronto-parallel plane has constant depth") {
    for (const double u : {0.0, 17.0, 50.0, 99.0}) {
        for (const double v : {0.0, 31.0, 99.0}) {
            CHECK(plane_to_depth(Vec3(0, 0, 1), 2.0, u, v, kK) == doctest::Approx(2.0));
        }
    }
}

TEST_CASE("plane_to_depth slanted plane matches the ray-plane oracle") {
    // Ray through (150,50) is (1,0,1); the plane n=(1/sqrt2,0,1/sqrt2), t=2 meets
    // it where d*(n.x + n.z) = t, i.e. d = 2/sqrt(2).
    const double s = 1.0 / std::sqrt(2.0);
    const double d = plane_to_depth(Vec3(s, 0, s), 2.0, 150.0, 50.0, kK);
    CHECK(d == doctest::Approx(2.0 / std::sqrt(2.0)).epsilon(1e-9));
    CHECK(d == doctest::Approx(1.414214).epsilon(1e-6));
}

TEST_CASE("plane_to_depth error paths") {
    CHECK_THROWS_WITH_AS(plane_to_depth(Vec3(1, 0, 0), 1.0, kK.cx, kK.cy, kK),
                         "plane_to_depth: ray parallel to plane", std::domain_error);
    // Plane met behind the camera: n=(0,0,-1) with positive t never intersects forward.
    CHECK_THROWS_WITH_AS(plane_to_depth(Vec3(0, 0, -1), 1.0, kK.cx, kK.cy, kK),
                         "plane_to_depth: plane behind camera", std::domain_error);
    CHECK_THROWS_AS(plane_to_depth(Vec3(0, 0, 2), 1.0, 10.0, 10.0, kK), std::domain_error);
    CHECK_THROWS_AS(plane_to_depth(Vec3(0, 0, 1), -1.0, 10.0, 10.0, kK), std::domain_error);
}

TEST_CASE("plane_to_depth is homogeneous in the distance") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unit(-1.0, 1.0), scale(0.1, 5.0);
    for (int i = 0; i < 200; ++i) {
        Vec3 n(unit(rng), unit(rng), 1.0 + std::abs(unit(rng)));
        n.normalize();
        const double t = 0.5 + std::abs(unit(rng));
        const double c = scale(rng);
        const double u = 50.0 + 30.0 * unit(rng), v = 50.0 + 30.0 * unit(rng);
        const double d1 = plane_to_depth(n, t, u, v, kK);
        const double dc = plane_to_depth(n, c * t, u, v, kK);
        CHECK(dc == doctest::Approx(c * d1).epsilon(1e-12));
    }
}

TEST_CASE("sign-flipped plane pairs canonicalize to the same depth") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        Vec3 n(0.3 * unit(rng), 0.3 * unit(rng), 1.0);
        n.normalize();
        double t = 0.5 + std::abs(unit(rng));
        Vec3 nf = -n;
        double tf = -t;
        // canonicalize to positive distance, as the maps modules do
        if (tf < 0) {
            nf = -nf;
            tf = -tf;
        }
        const double u = 50.0 + 40.0 * unit(rng), v = 50.0 + 40.0 * unit(rng);
        CHECK(plane_to_depth(nf, tf, u, v, kK) ==
              doctest::Approx(plane_to_depth(n, t, u, v, kK)).epsilon(1e-15));
    }
}

TEST_CASE("depth_map_from_plane_fields constant plane and validity propagation") {
    const int n = 8;
    const CameraIntrinsics K{10.0, 10.0, 3.5, 3.5};
    NormalMap normals(n, n);
    DistanceMap distances(n, n);
    for (int v = 0; v < n; ++v) {
        for (int u = 0; u < n; ++u) {
            normals.vectors(v, u) = Vec3(0, 0, 1);
            normals.valid(v, u) = 1;
            distances.values(v, u) = 4.0;
            distances.valid(v, u) = 1;
        }
    }
    distances.valid(2, 5) = 0;

    const DepthMap depth = depth_map_from_plane_fields(normals, distances, K, 10.0);
    for (int v = 0; v < n; ++v) {
        for (int u = 0; u < n; ++u) {
            if (v == 2 && u == 5) {
                CHECK(depth.valid(v, u) == 0);
            } else {
                CHECK(depth.valid(v, u) == 1);
                CHECK(depth.values(v, u) == doctest::Approx(4.0));
            }
        }
    }

    NormalMap wrong(4, 4);
    CHECK_THROWS_AS(depth_map_from_plane_fields(wrong, distances, K, 10.0), UsageError);
}

TEST_CASE("rendered plane fields reproduce rendered depth") {
    synth::GenerationParams params;
    params.max_panels = 3;
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        const auto scene = synth::generate_scene(seed, params);
        const auto sample = synth::render(scene);
        const DepthMap back =
            depth_map_from_plane_fields(sample.normal, sample.distance, scene.intrinsics,
                                        scene.max_depth);
        for (size_t i = 0; i < sample.depth.values.size(); ++i) {
            REQUIRE(sample.depth.valid[i] == 1);
            REQUIRE(back.valid[i] == 1);
            const double rel =
                std::abs(back.values[i] - sample.depth.values[i]) / sample.depth.values[i];
            CHECK(rel < 1e-5);
        }
    }
}

TEST_CASE("derive_gt on constant depth gives fronto-parallel planes") {
    const int n = 10;
    const CameraIntrinsics K{12.0, 12.0, 4.5, 4.5};
    DepthMap depth(n, n, 10.0);
    for (size_t i = 0; i < depth.values.size(); ++i) {
        depth.values[i] = 3.0;
        depth.valid[i] = 1;
    }
    const DerivedPlaneFields out = derive_gt_normal_distance(depth, K);
    for (int v = 0; v < n; ++v) {
        for (int u = 0; u < n; ++u) {
            REQUIRE(out.normals.valid(v, u) == 1);
            CHECK(out.normals.vectors(v, u).isApprox(Vec3(0, 0, 1), 1e-9));
            CHECK(out.distances.values(v, u) == doctest::Approx(3.0).epsilon(1e-9));
        }
    }
    CHECK(out.degenerate_pixels == 0);
}

TEST_CASE("derive_gt recovers a slanted plane's normal and distance") {
    synth::SceneSpec scene;
    scene.width = 32;
    scene.height = 32;
    scene.max_depth = 10.0;
    scene.intrinsics = {24.0, 24.0, 15.5, 15.5};
    synth::PlanePrimitive plane;
    const double a = 20.0 * std::numbers::pi / 180.0;
    plane.normal = Vec3(std::sin(a), 0.0, std::cos(a));
    plane.distance = 2.0;
    scene.planes.push_back(plane);

    const auto sample = synth::render(scene);
    REQUIRE(sample.miss_count == 0);
    const DerivedPlaneFields out = derive_gt_normal_distance(sample.depth, scene.intrinsics);
    for (int v = 0; v < scene.height; ++v) {
        for (int u = 0; u < scene.width; ++u) {
            REQUIRE(out.normals.valid(v, u) == 1);
            const double cosang = out.normals.vectors(v, u).dot(plane.normal);
            CHECK(std::acos(std::clamp(cosang, -1.0, 1.0)) < 0.5 * std::numbers::pi / 180.0);
            CHECK(std::abs(out.distances.values(v, u) - plane.distance) / plane.distance < 1e-3);
        }
    }
}

TEST_CASE("derive_gt round trip through the depth conversion") {
    synth::GenerationParams params;
    const auto scene = synth::generate_scene(21, params);
    const auto sample = synth::render(scene);
    const DerivedPlaneFields fields = derive_gt_normal_distance(sample.depth, scene.intrinsics);
    const DepthMap back = depth_map_from_plane_fields(fields.normals, fields.distances,
                                                      scene.intrinsics, scene.max_depth);
    // restrict to pixels whose 3x3 neighborhood lies on a single rendered plane
    for (int v = 1; v < scene.height - 1; ++v) {
        for (int u = 1; u < scene.width - 1; ++u) {
            bool single = true;
            for (int dv = -1; dv <= 1 && single; ++dv) {
                for (int du = -1; du <= 1; ++du) {
                    if (sample.plane_id(v + dv, u + du) != sample.plane_id(v, u)) {
                        single = false;
                        break;
                    }
                }
            }
            if (!single) continue;
            REQUIRE(back.valid(v, u) == 1);
            const double rel =
                std::abs(back.values(v, u) - sample.depth.values(v, u)) / sample.depth.values(v, u);
            CHECK(rel < 1e-3);
        }
    }
}

TEST_CASE("derive_gt with a single valid pixel yields no output") {
    DepthMap depth(6, 6, 10.0);
    depth.values(3, 3) = 2.0;
    depth.valid(3, 3) = 1;
    const DerivedPlaneFields out = derive_gt_normal_distance(depth, kK);
    for (size_t i = 0; i < out.normals.valid.size(); ++i) {
        CHECK(out.normals.valid[i] == 0);
        CHECK(out.distances.valid[i] == 0);
    }
}
