#include "plane2depth/colormap.hpp"

#include <algorithm>
#include <cmath>

namespace p2d {

namespace {

Vec3 lerp(const Vec3& a, const Vec3& b, double t) { return a + t * (b - a); }

}  // namespace

Vec3 rainbow_color(double t) {
    t = std::clamp(t, 0.0, 1.0);
    static const Vec3 stops[5] = {
        {0.0, 0.0, 1.0}, {0.0, 1.0, 1.0}, {0.0, 1.0, 0.0}, {1.0, 1.0, 0.0}, {1.0, 0.0, 0.0}};
    const double s = t * 4.0;
    const int i = std::min(3, static_cast<int>(s));
    return lerp(stops[i], stops[i + 1], s - i);
}

Vec3 coolwarm_color(double t) {
    t = std::clamp(t, 0.0, 1.0);
    static const Vec3 cool(0.230, 0.299, 0.754);
    static const Vec3 mid(0.865, 0.865, 0.865);
    static const Vec3 warm(0.706, 0.016, 0.150);
    return t < 0.5 ? lerp(cool, mid, 2.0 * t) : lerp(mid, warm, 2.0 * t - 1.0);
}

Grid<Rgb8> colorize_map(const Grid<double>& values, const Mask& valid, double max_value,
                        Vec3 (*palette)(double)) {
    Grid<Vec3> rgb(values.height(), values.width(), Vec3::Zero());
    for (size_t i = 0; i < values.size(); ++i) {
        if (valid[i] && max_value > 0.0) {
            rgb[i] = palette(values[i] / max_value);
        }
    }
    return quantize_rgb(rgb);
}

}  // namespace p2d
