#pragma once

#include "plane2depth/png_io.hpp"
#include "plane2depth/types.hpp"

namespace p2d {

// t in [0,1] -> blue..cyan..green..yellow..red.
Vec3 rainbow_color(double t);

// t in [0,1] -> cool blue through near-white to warm red.
Vec3 coolwarm_color(double t);

// Depth map colorized with rainbow over (0, max_value]; invalid pixels black.
Grid<Rgb8> colorize_map(const Grid<double>& values, const Mask& valid, double max_value,
                        Vec3 (*palette)(double));

}  // namespace p2d
