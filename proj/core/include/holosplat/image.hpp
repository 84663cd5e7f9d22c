#pragma once

#include "holosplat/geometry.hpp"

#include <vector>

namespace holosplat {

/// Row-major RGB image with channel values nominally in [0,1].
struct Image {
    int width = 0, height = 0;
    std::vector<Vec3> pixels;

    Image() = default;
    Image(int w, int h, const Vec3& fill = Vec3::Zero())
        : width(w), height(h), pixels(std::size_t(w) * h, fill) {}

    const Vec3& at(int row, int col) const { return pixels[std::size_t(row) * width + col]; }
    Vec3& at(int row, int col) { return pixels[std::size_t(row) * width + col]; }
    std::size_t pixel_count() const { return pixels.size(); }
};

/// 16-bit-style single-channel image (used for depth maps), values in meters.
struct GrayImage {
    int width = 0, height = 0;
    std::vector<double> pixels;

    GrayImage() = default;
    GrayImage(int w, int h, double fill = 0)
        : width(w), height(h), pixels(std::size_t(w) * h, fill) {}

    double at(int row, int col) const { return pixels[std::size_t(row) * width + col]; }
    double& at(int row, int col) { return pixels[std::size_t(row) * width + col]; }
};

} // namespace holosplat
