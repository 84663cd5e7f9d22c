#include "holosplat/depth.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>

namespace holosplat {

PointCloud unproject_depth(const DepthFrame& frame, double max_depth) {
    const auto& k = frame.intrinsics;
    if (max_depth <= 0) throw std::invalid_argument("unproject_depth: max_depth must be > 0");
    if (frame.depth.size() != static_cast<std::size_t>(k.width) * k.height)
        throw std::invalid_argument("unproject_depth: depth grid does not match intrinsics");

    PointCloud cloud;
    for (int v = 0; v < k.height; ++v) {
        for (int u = 0; u < k.width; ++u) {
            const double d = frame.at(v, u);
            if (!(d > 0.0) || d > max_depth) continue;  // rejects 0, NaN, too far
            cloud.positions.push_back(unproject(Pixel{double(u), double(v)}, d, k));
        }
    }
    return cloud;
}

PointCloud merge_frames(const std::vector<DepthFrame>& frames, double max_depth) {
    if (frames.empty()) throw std::invalid_argument("merge_frames: no frames");
    PointCloud merged;
    for (const auto& frame : frames) {
        PointCloud local = unproject_depth(frame, max_depth);
        for (const auto& p : local.positions)
            merged.positions.push_back(transform_point(frame.pose, p));
    }
    return merged;
}

PointCloud downsample_voxel(const PointCloud& cloud, double voxel) {
    if (voxel <= 0) throw std::invalid_argument("downsample_voxel: voxel must be > 0");

    struct Cell {
        Vec3 pos_sum = Vec3::Zero();
        Vec3 color_sum = Vec3::Zero();
        std::size_t count = 0;
    };
    std::unordered_map<std::uint64_t, std::size_t> index;
    std::vector<Cell> cells;

    auto key_of = [voxel](const Vec3& p) {
        // 21 bits per axis, offset to keep coordinates positive
        const std::int64_t kx = static_cast<std::int64_t>(std::floor(p.x() / voxel)) + (1 << 20);
        const std::int64_t ky = static_cast<std::int64_t>(std::floor(p.y() / voxel)) + (1 << 20);
        const std::int64_t kz = static_cast<std::int64_t>(std::floor(p.z() / voxel)) + (1 << 20);
        return (static_cast<std::uint64_t>(kx) << 42) |
               (static_cast<std::uint64_t>(ky) << 21) |
               static_cast<std::uint64_t>(kz);
    };

    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto key = key_of(cloud.positions[i]);
        auto [it, inserted] = index.try_emplace(key, cells.size());
        if (inserted) cells.emplace_back();
        Cell& cell = cells[it->second];
        cell.pos_sum += cloud.positions[i];
        if (cloud.has_colors()) cell.color_sum += cloud.colors[i];
        ++cell.count;
    }

    PointCloud out;
    out.positions.reserve(cells.size());
    for (const auto& cell : cells) {
        out.positions.push_back(cell.pos_sum / double(cell.count));
        if (cloud.has_colors()) out.colors.push_back(cell.color_sum / double(cell.count));
    }
    return out;
}

} // namespace holosplat
