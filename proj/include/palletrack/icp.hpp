#pragma once

#include "palletrack/cloud.hpp"
#include "palletrack/geom.hpp"

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace palletrack {

struct IcpParams {
    int max_iterations = 30;
    double convergence_eps = 1e-5;        // m, change in error between iterations
    double max_correspondence_dist = 0.15;  // m, hard rejection gate
    std::size_t min_points = 30;

    void validate() const;
};

/// Registration outcome. `transform` maps src onto dst (init included).
///
/// The error is the RMS nearest-neighbour distance over all source points with
/// rejected points counted at the gate distance. That truncated objective is
/// what each correspond/fit round can only decrease, so `error_history` is
/// non-increasing.
struct IcpResult {
    RigidTransform transform;
    double final_error = 0.0;
    int iterations = 0;
    bool converged = false;
    std::size_t inliers = 0;
    std::vector<double> error_history;  // error before the first fit, then after each
};

struct Correspondence {
    std::size_t src;
    std::size_t dst;
    double distance;
};

class IcpError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class RankDeficiencyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// For each source point, its exact nearest destination point within max_dist.
std::vector<Correspondence> nearest_correspondences(const PointCloud& src, const PointCloud& dst,
                                                    double max_dist);

/// Least-squares rigid fit (SVD/Kabsch) minimising Σ‖T·srcᵢ − dstᵢ‖².
/// Throws RankDeficiencyError for fewer than 3 pairs or collinear sources.
RigidTransform best_rigid_fit(std::span<const Vec3> src, std::span<const Vec3> dst);

/// Point-to-point ICP from `init`. Throws IcpError on too few points or when
/// every correspondence is rejected.
IcpResult icp_register(const PointCloud& src, const PointCloud& dst, const RigidTransform& init,
                       const IcpParams& params);

}  // namespace palletrack
