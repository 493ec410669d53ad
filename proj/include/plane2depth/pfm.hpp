#pragma once

#include "plane2depth/types.hpp"

#include <string>

namespace p2d {

// Single-channel PFM ("Pf"), little-endian float32, scale header -1.0,
// scanlines stored bottom-to-top per the format convention.
void write_pfm(const std::string& path, const Grid<float>& values);
Grid<float> read_pfm(const std::string& path);

Grid<float> to_float_grid(const Grid<double>& g);
Grid<double> to_double_grid(const Grid<float>& g);

}  // namespace p2d
