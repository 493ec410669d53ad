#include "plane2depth/pfm.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace p2d {

static_assert(std::endian::native == std::endian::little,
              "PFM I/O assumes a little-endian host");

void write_pfm(const std::string& path, const Grid<float>& values) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "Pf\n" << values.width() << " " << values.height() << "\n-1.0\n";
    for (int v = values.height() - 1; v >= 0; --v) {
        out.write(reinterpret_cast<const char*>(&values(v, 0)),
                  static_cast<std::streamsize>(values.width() * sizeof(float)));
    }
    if (!out) throw IoError("short write: " + path);
}

Grid<float> read_pfm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::string magic;
    int width = 0, height = 0;
    double scale = 0.0;
    in >> magic >> width >> height >> scale;
    if (!in || magic != "Pf" || width <= 0 || height <= 0) {
        throw IoError("malformed PFM header: " + path);
    }
    if (scale >= 0.0) throw IoError("big-endian PFM not supported: " + path);
    in.get();  // single whitespace after the scale line
    Grid<float> values(height, width, 0.0f);
    for (int v = height - 1; v >= 0; --v) {
        in.read(reinterpret_cast<char*>(&values(v, 0)),
                static_cast<std::streamsize>(width * sizeof(float)));
        if (!in) throw IoError("truncated PFM data: " + path);
    }
    return values;
}

Grid<float> to_float_grid(const Grid<double>& g) {
    Grid<float> out(g.height(), g.width(), 0.0f);
    for (size_t i = 0; i < g.size(); ++i) out[i] = static_cast<float>(g[i]);
    return out;
}

Grid<double> to_double_grid(const Grid<float>& g) {
    Grid<double> out(g.height(), g.width(), 0.0);
    for (size_t i = 0; i < g.size(); ++i) out[i] = static_cast<double>(g[i]);
    return out;
}

}  // namespace p2d
