#pragma once

#include "holosplat/geometry.hpp"

#include <cstddef>
#include <vector>

namespace holosplat {

/// Static 3-d kd-tree over a fixed set of points. Nearest-neighbor answers
/// match brute force exactly; distance ties resolve to the lowest point index.
class KdTree {
public:
    explicit KdTree(std::vector<Vec3> points);

    std::size_t size() const { return points_.size(); }
    const Vec3& point(std::size_t i) const { return points_[i]; }

    struct Hit {
        std::size_t index;
        double distance;
    };

    /// Closest point to q. Requires a non-empty tree.
    Hit nearest(const Vec3& q) const;

    /// k closest points to q, sorted by (distance, index) ascending.
    /// exclude, when not npos, removes that point index from candidates.
    std::vector<Hit> knearest(const Vec3& q, std::size_t k,
                              std::size_t exclude = static_cast<std::size_t>(-1)) const;

private:
    struct Node {
        int axis = -1;           // -1 marks a leaf
        double split = 0;
        std::size_t begin = 0, end = 0;  // leaf range into order_
        int left = -1, right = -1;
    };

    int build(std::size_t begin, std::size_t end);
    void search(int node, const Vec3& q, std::size_t k, std::size_t exclude,
                std::vector<Hit>& heap) const;

    std::vector<Vec3> points_;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

} // namespace holosplat
