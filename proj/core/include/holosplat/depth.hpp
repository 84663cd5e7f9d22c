#pragma once

#include "holosplat/geometry.hpp"
#include "holosplat/point_cloud.hpp"

#include <vector>

namespace holosplat {

/// Per-pixel z-depth in meters (along the optical axis, not ray length).
/// 0 or NaN marks an invalid return.
struct DepthFrame {
    std::vector<double> depth;  // row-major, height x width
    CameraIntrinsics intrinsics;
    Pose pose;  // camera-to-world

    double at(int row, int col) const {
        return depth[static_cast<std::size_t>(row) * intrinsics.width + col];
    }
};

/// One point per valid pixel with 0 < depth <= max_depth, at the pixel
/// center, in the camera frame. Throws on grid/intrinsics size mismatch.
PointCloud unproject_depth(const DepthFrame& frame, double max_depth);

/// Unproject every frame and concatenate in world frame (frame order,
/// row-major pixel order within a frame). Throws on an empty frame list.
PointCloud merge_frames(const std::vector<DepthFrame>& frames, double max_depth);

/// At most one point (the centroid) per occupied voxel. Colors, when
/// present, are averaged per voxel. Throws on non-positive voxel size.
PointCloud downsample_voxel(const PointCloud& cloud, double voxel);

} // namespace holosplat
