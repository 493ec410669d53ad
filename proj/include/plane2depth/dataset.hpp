#pragma once

#include "plane2depth/synth.hpp"
#include "plane2depth/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace p2d {

// One sample as stored on disk: sample_{seed:08}/ with rgb.png, depth.pfm,
// normal_{x,y,z}.pfm, distance.pfm and meta.json. Depth 0 marks invalid pixels.
struct StoredSample {
    Grid<Vec3> rgb;
    DepthMap depth;
    NormalMap normal;
    DistanceMap distance;
    CameraIntrinsics intrinsics;
    double max_depth = 0.0;
    std::uint64_t seed = 0;
    int plane_count = 0;
};

struct ManifestEntry {
    std::string dir;
    std::uint64_t seed = 0;
};

struct DatasetManifest {
    int count = 0;
    int width = 0;
    int height = 0;
    std::uint64_t base_seed = 0;
    synth::GenerationParams params;
    std::vector<ManifestEntry> samples;
};

std::string sample_dir_name(std::uint64_t seed);

void write_sample(const std::string& dir, const synth::SceneSpec& scene,
                  const synth::RenderedSample& rendered);
StoredSample read_sample(const std::string& dir);

// Generates `count` scenes with seeds base_seed..base_seed+count-1, renders and
// writes them plus a top-level manifest.json. Returns total missed rays (0 for a
// correct generator).
int generate_dataset(const std::string& out_dir, int count, std::uint64_t base_seed,
                     const synth::GenerationParams& params);

DatasetManifest read_manifest(const std::string& dataset_dir);
std::vector<StoredSample> read_dataset(const std::string& dataset_dir);

}  // namespace p2d
