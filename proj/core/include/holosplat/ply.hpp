#pragma once

#include "holosplat/gaussians.hpp"
#include "holosplat/point_cloud.hpp"

#include <filesystem>

namespace holosplat {

struct PlyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Binary little-endian PLY, element "vertex" with x,y,z (+ red,green,blue
/// uchar when the cloud is colored).
void write_ply(const PointCloud& cloud, const std::filesystem::path& path);

/// Reads x,y,z (float or double) and optional rgb/f_dc colors from any
/// binary little-endian or ascii PLY vertex element.
PointCloud read_ply(const std::filesystem::path& path);

/// Gaussian checkpoint layout: per-vertex float32 properties
/// x,y,z, f_dc_0..2, f_rest_*, opacity, scale_0..2, rot_0..3, all stored
/// unactivated. Interoperable with common splatting viewers.
void write_gaussian_ply(const GaussianSet& g, const std::filesystem::path& path);

GaussianSet read_gaussian_ply(const std::filesystem::path& path);

} // namespace holosplat
