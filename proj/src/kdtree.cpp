#include "palletrack/kdtree.hpp"

#include <algorithm>
#include <numeric>

namespace palletrack {

namespace {

inline double squared_distance(const Vec3& a, const Vec3& b) {
    const double dx = a.x() - b.x();
    const double dy = a.y() - b.y();
    const double dz = a.z() - b.z();
    return dx * dx + dy * dy + dz * dz;
}

inline bool better(double d2, std::size_t idx, const KdTree::Hit& best) {
    return d2 < best.dist2 || (d2 == best.dist2 && idx < best.index);
}

}  // namespace

KdTree::KdTree(std::span<const Vec3> points)
    : points_(points.begin(), points.end()), order_(points.size()) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    if (!points_.empty()) {
        nodes_.reserve(2 * points_.size() / kLeafSize + 2);
        build(0, points_.size(), 0);
    }
}

int KdTree::build(std::size_t begin, std::size_t end, int depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    if (end - begin <= kLeafSize) {
        nodes_[id].begin = begin;
        nodes_[id].end = end;
        return id;
    }

    // Split on the widest extent.
    Vec3 lo = points_[order_[begin]];
    Vec3 hi = lo;
    for (std::size_t i = begin; i < end; ++i) {
        lo = lo.cwiseMin(points_[order_[i]]);
        hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    (void)depth;

    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::size_t a, std::size_t b) {
                         const double pa = points_[a][axis];
                         const double pb = points_[b][axis];
                         return pa < pb || (pa == pb && a < b);
                     });
    const double split = points_[order_[mid]][axis];
    const int left = build(begin, mid, depth + 1);
    const int right = build(mid, end, depth + 1);
    nodes_[id].axis = axis;
    nodes_[id].split = split;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

void KdTree::search(int node_id, const Vec3& q, Hit& best) const {
    const Node& node = nodes_[node_id];
    if (node.axis < 0) {
        for (std::size_t i = node.begin; i < node.end; ++i) {
            const std::size_t idx = order_[i];
            const double d2 = squared_distance(q, points_[idx]);
            if (better(d2, idx, best)) {
                best.dist2 = d2;
                best.index = idx;
            }
        }
        return;
    }
    // Left holds coordinates <= split, right holds coordinates >= split.
    const double diff = q[node.axis] - node.split;
    const int first = diff <= 0.0 ? node.left : node.right;
    const int second = diff <= 0.0 ? node.right : node.left;
    search(first, q, best);
    // Keep ties reachable: only prune strictly farther half-spaces.
    if (diff * diff <= best.dist2) search(second, q, best);
}

KdTree::Hit KdTree::nearest(const Vec3& query, double max_dist2) const {
    Hit best;
    best.dist2 = max_dist2;
    if (nodes_.empty()) return {};
    search(0, query, best);
    if (best.index == std::numeric_limits<std::size_t>::max()) return {};
    return best;
}

}  // namespace palletrack
