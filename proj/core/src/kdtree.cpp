#include "holosplat/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace holosplat {

namespace {
constexpr std::size_t kLeafSize = 16;

bool better(const KdTree::Hit& a, const KdTree::Hit& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.index < b.index;
}
} // namespace

KdTree::KdTree(std::vector<Vec3> points) : points_(std::move(points)) {
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    if (!points_.empty()) root_ = build(0, points_.size());
}

int KdTree::build(std::size_t begin, std::size_t end) {
    Node node;
    node.begin = begin;
    node.end = end;
    if (end - begin <= kLeafSize) {
        nodes_.push_back(node);
        return static_cast<int>(nodes_.size() - 1);
    }
    Vec3 lo = points_[order_[begin]], hi = lo;
    for (std::size_t i = begin + 1; i < end; ++i) {
        lo = lo.cwiseMin(points_[order_[i]]);
        hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::size_t a, std::size_t b) {
                         if (points_[a][axis] != points_[b][axis])
                             return points_[a][axis] < points_[b][axis];
                         return a < b;
                     });
    node.axis = axis;
    node.split = points_[order_[mid]][axis];
    const int self = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    const int left = build(begin, mid);
    const int right = build(mid, end);
    nodes_[self].left = left;
    nodes_[self].right = right;
    return self;
}

void KdTree::search(int node_idx, const Vec3& q, std::size_t k, std::size_t exclude,
                    std::vector<Hit>& heap) const {
    const Node& node = nodes_[node_idx];
    if (node.axis < 0) {
        for (std::size_t i = node.begin; i < node.end; ++i) {
            const std::size_t idx = order_[i];
            if (idx == exclude) continue;
            Hit h{idx, (points_[idx] - q).norm()};
            if (heap.size() < k) {
                heap.push_back(h);
                std::push_heap(heap.begin(), heap.end(), better);
            } else if (better(h, heap.front())) {
                std::pop_heap(heap.begin(), heap.end(), better);
                heap.back() = h;
                std::push_heap(heap.begin(), heap.end(), better);
            }
        }
        return;
    }
    const double delta = q[node.axis] - node.split;
    const int first = delta < 0 ? node.left : node.right;
    const int second = delta < 0 ? node.right : node.left;
    search(first, q, k, exclude, heap);
    if (heap.size() < k || std::abs(delta) <= heap.front().distance)
        search(second, q, k, exclude, heap);
}

KdTree::Hit KdTree::nearest(const Vec3& q) const {
    auto hits = knearest(q, 1);
    if (hits.empty()) throw std::runtime_error("KdTree::nearest on empty tree");
    return hits[0];
}

std::vector<KdTree::Hit> KdTree::knearest(const Vec3& q, std::size_t k,
                                          std::size_t exclude) const {
    std::vector<Hit> heap;
    if (root_ >= 0 && k > 0) {
        heap.reserve(k + 1);
        search(root_, q, k, exclude, heap);
    }
    std::sort(heap.begin(), heap.end(), better);
    return heap;
}

} // namespace holosplat
