#include "plane2depth/png_io.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

namespace p2d {

namespace {

const std::uint8_t kSignature[8] = {137, 80, 78, 71, 13, 10, 26, 10};

void put_u32_be(std::vector<std::uint8_t>& buf, std::uint32_t v) {
    buf.push_back(static_cast<std::uint8_t>(v >> 24));
    buf.push_back(static_cast<std::uint8_t>(v >> 16));
    buf.push_back(static_cast<std::uint8_t>(v >> 8));
    buf.push_back(static_cast<std::uint8_t>(v));
}

std::uint32_t read_u32_be(const std::uint8_t* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
           (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

void append_chunk(std::vector<std::uint8_t>& out, const char type[4],
                  const std::vector<std::uint8_t>& data) {
    put_u32_be(out, static_cast<std::uint32_t>(data.size()));
    const size_t crc_start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    const auto crc = crc32(0L, out.data() + crc_start, static_cast<uInt>(out.size() - crc_start));
    put_u32_be(out, static_cast<std::uint32_t>(crc));
}

int paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

}  // namespace

void write_png_rgb8(const std::string& path, const Grid<Rgb8>& image) {
    const int h = image.height(), w = image.width();
    if (h <= 0 || w <= 0) throw UsageError("write_png_rgb8: empty image");

    std::vector<std::uint8_t> raw;
    raw.reserve(static_cast<size_t>(h) * (1 + 3 * w));
    for (int v = 0; v < h; ++v) {
        raw.push_back(0);  // filter: none
        for (int u = 0; u < w; ++u) {
            const Rgb8& px = image(v, u);
            raw.insert(raw.end(), px.begin(), px.end());
        }
    }
    uLongf comp_len = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> comp(comp_len);
    if (compress2(comp.data(), &comp_len, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK) {
        throw IoError("png deflate failed: " + path);
    }
    comp.resize(comp_len);

    std::vector<std::uint8_t> out(kSignature, kSignature + 8);
    std::vector<std::uint8_t> ihdr;
    put_u32_be(ihdr, static_cast<std::uint32_t>(w));
    put_u32_be(ihdr, static_cast<std::uint32_t>(h));
    ihdr.push_back(8);   // bit depth
    ihdr.push_back(2);   // RGB
    ihdr.push_back(0);   // compression
    ihdr.push_back(0);   // filter
    ihdr.push_back(0);   // interlace
    append_chunk(out, "IHDR", ihdr);
    append_chunk(out, "IDAT", comp);
    append_chunk(out, "IEND", {});

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("short write: " + path);
}

Grid<Rgb8> read_png_rgb8(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kSignature, 8) != 0) {
        throw IoError("not a PNG file: " + path);
    }

    int w = 0, h = 0, color_type = -1, bit_depth = 0;
    std::vector<std::uint8_t> idat;
    size_t pos = 8;
    while (pos + 12 <= bytes.size()) {
        const std::uint32_t len = read_u32_be(&bytes[pos]);
        if (pos + 12 + len > bytes.size()) throw IoError("truncated PNG chunk: " + path);
        const char* type = reinterpret_cast<const char*>(&bytes[pos + 4]);
        const std::uint8_t* data = &bytes[pos + 8];
        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) throw IoError("bad IHDR: " + path);
            w = static_cast<int>(read_u32_be(data));
            h = static_cast<int>(read_u32_be(data + 4));
            bit_depth = data[8];
            color_type = data[9];
            if (data[12] != 0) throw IoError("interlaced PNG not supported: " + path);
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), data, data + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            break;
        }
        pos += 12 + len;
    }
    if (w <= 0 || h <= 0 || idat.empty()) throw IoError("missing PNG data: " + path);
    if (bit_depth != 8 || (color_type != 0 && color_type != 2 && color_type != 6)) {
        throw IoError("unsupported PNG format (need 8-bit gray/RGB/RGBA): " + path);
    }
    const int channels = color_type == 0 ? 1 : color_type == 2 ? 3 : 4;
    const size_t stride = static_cast<size_t>(w) * channels;
    const size_t raw_len = static_cast<size_t>(h) * (stride + 1);
    std::vector<std::uint8_t> raw(raw_len);
    uLongf out_len = static_cast<uLongf>(raw_len);
    if (uncompress(raw.data(), &out_len, idat.data(), static_cast<uLong>(idat.size())) != Z_OK ||
        out_len != raw_len) {
        throw IoError("png inflate failed: " + path);
    }

    // Undo per-row filters in place on a packed buffer.
    std::vector<std::uint8_t> pixels(static_cast<size_t>(h) * stride);
    for (int v = 0; v < h; ++v) {
        const std::uint8_t filter = raw[static_cast<size_t>(v) * (stride + 1)];
        const std::uint8_t* src = &raw[static_cast<size_t>(v) * (stride + 1) + 1];
        std::uint8_t* dst = &pixels[static_cast<size_t>(v) * stride];
        const std::uint8_t* prev = v > 0 ? &pixels[static_cast<size_t>(v - 1) * stride] : nullptr;
        for (size_t i = 0; i < stride; ++i) {
            const int a = i >= static_cast<size_t>(channels) ? dst[i - channels] : 0;
            const int b = prev ? prev[i] : 0;
            const int c = (prev && i >= static_cast<size_t>(channels)) ? prev[i - channels] : 0;
            int x = src[i];
            switch (filter) {
                case 0: break;
                case 1: x += a; break;
                case 2: x += b; break;
                case 3: x += (a + b) / 2; break;
                case 4: x += paeth(a, b, c); break;
                default: throw IoError("unknown PNG filter: " + path);
            }
            dst[i] = static_cast<std::uint8_t>(x & 0xff);
        }
    }

    Grid<Rgb8> image(h, w, Rgb8{0, 0, 0});
    for (int v = 0; v < h; ++v) {
        for (int u = 0; u < w; ++u) {
            const std::uint8_t* px = &pixels[(static_cast<size_t>(v) * w + u) * channels];
            if (channels == 1) {
                image(v, u) = {px[0], px[0], px[0]};
            } else {
                image(v, u) = {px[0], px[1], px[2]};
            }
        }
    }
    return image;
}

Grid<Rgb8> quantize_rgb(const Grid<Vec3>& rgb) {
    Grid<Rgb8> out(rgb.height(), rgb.width(), Rgb8{0, 0, 0});
    for (size_t i = 0; i < rgb.size(); ++i) {
        for (int c = 0; c < 3; ++c) {
            const double v = std::clamp(rgb[i][c], 0.0, 1.0);
            out[i][c] = static_cast<std::uint8_t>(std::lround(v * 255.0));
        }
    }
    return out;
}

Grid<Vec3> dequantize_rgb(const Grid<Rgb8>& rgb) {
    Grid<Vec3> out(rgb.height(), rgb.width(), Vec3::Zero());
    for (size_t i = 0; i < rgb.size(); ++i) {
        out[i] = Vec3(rgb[i][0], rgb[i][1], rgb[i][2]) / 255.0;
    }
    return out;
}

}  // namespace p2d
