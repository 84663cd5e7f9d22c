#pragma once

#include "holosplat/image.hpp"

#include <filesystem>
#include <stdexcept>

namespace holosplat {

struct ImageIoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// 8-bit RGB PNG. Values are clamped to [0,1] and rounded on write,
/// divided by 255 on read.
void write_png_rgb8(const Image& image, const std::filesystem::path& path);
Image read_png_rgb8(const std::filesystem::path& path);

/// 16-bit grayscale PNG used for depth maps. meters_per_unit converts
/// between stored integers and meters (0.001 = millimeters). Values
/// outside the 16-bit range saturate; 0 stays 0 (no return).
void write_png_gray16(const GrayImage& meters, const std::filesystem::path& path,
                      double meters_per_unit);
GrayImage read_png_gray16(const std::filesystem::path& path, double meters_per_unit);

} // namespace holosplat
