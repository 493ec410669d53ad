#pragma once

#include "plane2depth/types.hpp"

#include <array>
#include <string>

namespace p2d {

using Rgb8 = std::array<std::uint8_t, 3>;

// 8-bit RGB PNG, non-interlaced. The reader accepts grayscale, RGB, and RGBA
// (alpha dropped) with standard per-row filters; palette images are rejected.
void write_png_rgb8(const std::string& path, const Grid<Rgb8>& image);
Grid<Rgb8> read_png_rgb8(const std::string& path);

Grid<Rgb8> quantize_rgb(const Grid<Vec3>& rgb);
Grid<Vec3> dequantize_rgb(const Grid<Rgb8>& rgb);

}  // namespace p2d
