#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace p2d {

// Thrown on API misuse and bad configuration; the CLI maps this to exit code 2.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ConfigError : public UsageError {
public:
    using UsageError::UsageError;
};

// File-level failures (missing, truncated, malformed); CLI exit code 1.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class TrainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;

// Dense H×W grid stored row-major; (v, u) indexing with v the image row.
template <typename T>
class Grid {
public:
    Grid() = default;
    Grid(int height, int width, T fill = T{})
        : height_(height), width_(width), data_(static_cast<size_t>(height) * width, fill) {}

    int height() const { return height_; }
    int width() const { return width_; }
    size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& operator()(int v, int u) { return data_[static_cast<size_t>(v) * width_ + u]; }
    const T& operator()(int v, int u) const { return data_[static_cast<size_t>(v) * width_ + u]; }
    T& operator[](size_t i) { return data_[i]; }
    const T& operator[](size_t i) const { return data_[i]; }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    template <typename U>
    bool same_shape(const Grid<U>& other) const {
        return height_ == other.height() && width_ == other.width();
    }

    bool operator==(const Grid<T>& other) const {
        return height_ == other.height_ && width_ == other.width_ && data_ == other.data_;
    }

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<T> data_;
};

using Mask = Grid<std::uint8_t>;

struct CameraIntrinsics {
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;

    // fx, fy > 0 and the principal point inside the image.
    void validate(int width, int height) const {
        if (!(fx > 0.0) || !(fy > 0.0)) {
            throw UsageError("intrinsics: fx and fy must be positive");
        }
        if (cx < 0.0 || cx >= width || cy < 0.0 || cy >= height) {
            throw UsageError("intrinsics: principal point outside image bounds");
        }
    }

    bool operator==(const CameraIntrinsics&) const = default;
};

// Per-pixel depth in meters. Invalid pixels carry 0 and are excluded everywhere.
struct DepthMap {
    Grid<double> values;
    Mask valid;
    double max_depth = 0.0;

    DepthMap() = default;
    DepthMap(int height, int width, double max_d)
        : values(height, width, 0.0), valid(height, width, 0), max_depth(max_d) {}
};

// Unit surface normals, oriented so that N(p)·X(p) > 0 for the back-projected point X.
struct NormalMap {
    Grid<Vec3> vectors;
    Mask valid;

    NormalMap() = default;
    NormalMap(int height, int width)
        : vectors(height, width, Vec3::Zero()), valid(height, width, 0) {}
};

// Plane-to-origin distances T(p), strictly positive on valid pixels.
struct DistanceMap {
    Grid<double> values;
    Mask valid;

    DistanceMap() = default;
    DistanceMap(int height, int width)
        : values(height, width, 0.0), valid(height, width, 0) {}
};

}  // namespace p2d
