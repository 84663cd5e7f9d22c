#pragma once

#include "holosplat/geometry.hpp"

#include <vector>

namespace holosplat {

/// Positions in a shared world frame (meters) plus optional per-point
/// colors in [0,1]. colors is either empty or the same length as positions.
struct PointCloud {
    std::vector<Vec3> positions;
    std::vector<Vec3> colors;

    std::size_t size() const { return positions.size(); }
    bool has_colors() const { return !colors.empty(); }
};

} // namespace holosplat
