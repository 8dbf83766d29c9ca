#include "palletrack/icp.hpp"

#include "palletrack/kdtree.hpp"

#include <cmath>
#include <string>

namespace palletrack {

void IcpParams::validate() const {
    if (max_iterations < 1) throw std::invalid_argument("IcpParams: max_iterations < 1");
    if (!(convergence_eps > 0.0)) throw std::invalid_argument("IcpParams: convergence_eps <= 0");
    if (!(max_correspondence_dist > 0.0)) {
        throw std::invalid_argument("IcpParams: max_correspondence_dist <= 0");
    }
}

std::vector<Correspondence> nearest_correspondences(const PointCloud& src, const PointCloud& dst,
                                                    double max_dist) {
    if (src.frame() != dst.frame()) {
        throw std::invalid_argument("nearest_correspondences: clouds in different frames");
    }
    std::vector<Correspondence> out;
    if (src.empty() || dst.empty()) return out;
    const KdTree tree(dst.points());
    const double gate2 = max_dist * max_dist;
    out.reserve(src.size());
    for (std::size_t i = 0; i < src.size(); ++i) {
        const auto hit = tree.nearest(src[i], gate2);
        if (hit.index != KdTree::Hit{}.index) out.push_back({i, hit.index, std::sqrt(hit.dist2)});
    }
    return out;
}

RigidTransform best_rigid_fit(std::span<const Vec3> src, std::span<const Vec3> dst) {
    if (src.size() != dst.size()) throw std::invalid_argument("best_rigid_fit: size mismatch");
    if (src.size() < 3) throw RankDeficiencyError("best_rigid_fit: fewer than 3 pairs");

    const double n = static_cast<double>(src.size());
    Vec3 cs = Vec3::Zero();
    Vec3 cd = Vec3::Zero();
    for (std::size_t i = 0; i < src.size(); ++i) {
        cs += src[i];
        cd += dst[i];
    }
    cs /= n;
    cd /= n;

    Mat3 h = Mat3::Zero();
    Mat3 spread = Mat3::Zero();
    for (std::size_t i = 0; i < src.size(); ++i) {
        const Vec3 ps = src[i] - cs;
        h += ps * (dst[i] - cd).transpose();
        spread += ps * ps.transpose();
    }

    // Collinear or coincident sources leave rotation about the line undefined.
    const Eigen::SelfAdjointEigenSolver<Mat3> eig(spread);
    const Vec3 ev = eig.eigenvalues();  // ascending
    if (!(ev[2] > 0.0) || ev[1] <= 1e-12 * ev[2]) {
        throw RankDeficiencyError("best_rigid_fit: degenerate (collinear or coincident) points");
    }

    Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Mat3& u = svd.matrixU();
    const Mat3& v = svd.matrixV();
    Mat3 d = Mat3::Identity();
    if ((v * u.transpose()).determinant() < 0.0) d(2, 2) = -1.0;
    const Mat3 r = v * d * u.transpose();
    return {r, cd - r * cs};
}

namespace {

struct Matching {
    std::vector<Vec3> src;
    std::vector<Vec3> dst;
    double error = 0.0;  // truncated RMS
};

Matching match(const std::vector<Vec3>& moved, const KdTree& tree, const PointCloud& dst,
               double gate) {
    Matching m;
    m.src.reserve(moved.size());
    m.dst.reserve(moved.size());
    const double gate2 = gate * gate;
    double sum = 0.0;
    for (const auto& p : moved) {
        const auto hit = tree.nearest(p, gate2);
        if (hit.index == KdTree::Hit{}.index) {
            sum += gate2;
            continue;
        }
        sum += hit.dist2;
        m.src.push_back(p);
        m.dst.push_back(dst[hit.index]);
    }
    m.error = std::sqrt(sum / static_cast<double>(moved.size()));
    return m;
}

}  // namespace

IcpResult icp_register(const PointCloud& src, const PointCloud& dst, const RigidTransform& init,
                       const IcpParams& params) {
    params.validate();
    if (src.frame() != dst.frame()) {
        throw std::invalid_argument("icp_register: clouds in different frames");
    }
    if (src.size() < params.min_points || dst.size() < params.min_points) {
        throw IcpError("icp_register: too few points (src " + std::to_string(src.size()) +
                       ", dst " + std::to_string(dst.size()) + ", need " +
                       std::to_string(params.min_points) + ")");
    }

    const KdTree tree(dst.points());
    std::vector<Vec3> moved;
    moved.reserve(src.size());
    for (const auto& p : src.points()) moved.push_back(init.apply(p));

    IcpResult result;
    result.transform = init;
    Matching m = match(moved, tree, dst, params.max_correspondence_dist);
    result.error_history.push_back(m.error);

    for (int it = 0; it < params.max_iterations; ++it) {
        if (m.src.size() < 3) {
            throw IcpError("icp_register: all correspondences rejected");
        }
        const RigidTransform step = best_rigid_fit(m.src, m.dst);
        std::vector<Vec3> next(moved.size());
        for (std::size_t i = 0; i < moved.size(); ++i) next[i] = step.apply(moved[i]);
        Matching nm = match(next, tree, dst, params.max_correspondence_dist);

        // Rounding can produce a last-ulp rise once the fit is stationary.
        if (nm.error > m.error) {
            result.converged = true;
            break;
        }
        result.transform = step * result.transform;
        result.iterations = it + 1;
        result.error_history.push_back(nm.error);
        const double change = m.error - nm.error;
        moved = std::move(next);
        m = std::move(nm);
        if (change < params.convergence_eps) {
            result.converged = true;
            break;
        }
    }
    if (m.src.empty()) throw IcpError("icp_register: all correspondences rejected");
    result.final_error = m.error;
    result.inliers = m.src.size();
    return result;
}

}  // namespace palletrack
