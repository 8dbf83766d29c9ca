#pragma once

#include "palletrack/geom.hpp"

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace palletrack {

/// Exact nearest-neighbour index over a fixed point set. Equal distances
/// resolve to the lowest point index, matching a brute-force scan.
class KdTree {
public:
    explicit KdTree(std::span<const Vec3> points);

    struct Hit {
        std::size_t index = std::numeric_limits<std::size_t>::max();
        double dist2 = std::numeric_limits<double>::infinity();
    };

    /// Nearest point with squared distance <= max_dist2, or an empty Hit.
    Hit nearest(const Vec3& query,
                double max_dist2 = std::numeric_limits<double>::infinity()) const;

    std::size_t size() const { return points_.size(); }

private:
    struct Node {
        int axis = -1;          // -1 for leaves
        double split = 0.0;
        std::size_t begin = 0;  // range into order_ (leaves)
        std::size_t end = 0;
        int left = -1;
        int right = -1;
    };

    int build(std::size_t begin, std::size_t end, int depth);
    void search(int node, const Vec3& q, Hit& best) const;

    std::vector<Vec3> points_;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
    static constexpr std::size_t kLeafSize = 12;
};

}  // namespace palletrack
