#include "palletrack/geom.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace palletrack {

namespace {

double ortho_error(const Mat3& r) {
    return (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
}

Mat3 polar_rotation(const Mat3& r) {
    Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 u = svd.matrixU();
    if ((u * svd.matrixV().transpose()).determinant() < 0.0) {
        u.col(2) *= -1.0;
    }
    return u * svd.matrixV().transpose();
}

}  // namespace

RigidTransform::RigidTransform()
    : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}

RigidTransform::RigidTransform(const Mat3& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {
    if (!rotation.allFinite() || !translation.allFinite()) {
        throw std::invalid_argument("RigidTransform: non-finite entries");
    }
    if (ortho_error(rotation) > 1e-6 || rotation.determinant() < 0.0) {
        throw std::invalid_argument("RigidTransform: not a proper rotation");
    }
    enforce_orthonormal();
}

RigidTransform RigidTransform::from_matrix(const Mat4& m) {
    return {m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>()};
}

RigidTransform RigidTransform::translation(double x, double y, double z) {
    return translation(Vec3(x, y, z));
}

RigidTransform RigidTransform::translation(const Vec3& t) {
    return {Mat3::Identity(), t};
}

RigidTransform RigidTransform::rot_x(double angle) {
    return rotation_about(Vec3::UnitX(), angle);
}

RigidTransform RigidTransform::rot_y(double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    Mat3 r;
    r << c, 0.0, s,
         0.0, 1.0, 0.0,
        -s, 0.0, c;
    return {r, Vec3::Zero()};
}

RigidTransform RigidTransform::rot_z(double angle) {
    return rotation_about(Vec3::UnitZ(), angle);
}

RigidTransform RigidTransform::rotation_about(const Vec3& axis, double angle) {
    const Mat3 r = Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
    return {r, Vec3::Zero()};
}

Mat4 RigidTransform::matrix() const {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = rotation_;
    m.topRightCorner<3, 1>() = translation_;
    return m;
}

RigidTransform RigidTransform::inverse() const {
    RigidTransform out;
    out.rotation_ = rotation_.transpose();
    out.translation_ = -(out.rotation_ * translation_);
    return out;
}

RigidTransform RigidTransform::operator*(const RigidTransform& rhs) const {
    RigidTransform out;
    out.rotation_ = rotation_ * rhs.rotation_;
    out.translation_ = rotation_ * rhs.translation_ + translation_;
    out.enforce_orthonormal();
    return out;
}

double RigidTransform::orthonormality_error() const { return ortho_error(rotation_); }

double RigidTransform::angle_between(const RigidTransform& a, const RigidTransform& b) {
    const Mat3 rel = a.rotation_.transpose() * b.rotation_;
    const double c = std::clamp((rel.trace() - 1.0) / 2.0, -1.0, 1.0);
    return std::acos(c);
}

void RigidTransform::enforce_orthonormal() {
    if (ortho_error(rotation_) > kOrthonormalDrift) {
        rotation_ = polar_rotation(rotation_);
    }
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) { return a * b; }

double pitch_of(const Mat3& r) {
    const Vec3 rz = r * axis::up;
    return std::atan2(axis::forward.dot(rz), axis::up.dot(rz));
}

MastPolyline::MastPolyline()
    : MastPolyline({{0.0, 0.0}, {0.3, 0.3}, {6.0, 0.3 + 0.5 * 5.7}}) {}

MastPolyline::MastPolyline(std::vector<std::pair<double, double>> breakpoints)
    : breakpoints_(std::move(breakpoints)) {
    if (breakpoints_.size() != 3) {
        throw std::invalid_argument("mast polyline needs exactly 3 breakpoints (2 segments)");
    }
    for (std::size_t i = 1; i < breakpoints_.size(); ++i) {
        if (!(breakpoints_[i].first > breakpoints_[i - 1].first)) {
            throw std::invalid_argument("mast polyline heights must be strictly increasing");
        }
    }
    const auto& [h1, m1] = breakpoints_[1];
    const auto& [h2, m2] = breakpoints_[2];
    if (std::abs((m2 - m1) / (h2 - h1) - 0.5) > 1e-9) {
        throw std::invalid_argument("mast polyline second segment must have slope 0.5");
    }
}

double mast_from_height(double fork_height, const MastPolyline& polyline) {
    const auto& bp = polyline.breakpoints();
    if (!(fork_height >= bp.front().first && fork_height <= bp.back().first)) {
        std::ostringstream msg;
        msg << "fork height " << fork_height << " m outside mast polyline domain ["
            << bp.front().first << ", " << bp.back().first << "]";
        throw DomainError(msg.str(), fork_height);
    }
    for (std::size_t i = 1; i < bp.size(); ++i) {
        if (fork_height <= bp[i].first) {
            const auto& [h0, m0] = bp[i - 1];
            const auto& [h1, m1] = bp[i];
            const double u = (fork_height - h0) / (h1 - h0);
            return m0 + u * (m1 - m0);
        }
    }
    return bp.back().second;
}

RigidTransform camera_pose(const KinematicConfig& cfg) {
    const double mast = mast_from_height(cfg.fork_height, cfg.mast_polyline);
    return RigidTransform::translation(cfg.reach, 0.0, 0.0) *
           RigidTransform::translation(0.0, 0.0, mast) * cfg.camera_on_mast;
}

RigidTransform fork_pose(const KinematicConfig& cfg) {
    return RigidTransform::translation(cfg.reach, 0.0, 0.0) *
           RigidTransform::translation(0.0, 0.0, cfg.fork_height) *
           RigidTransform::rot_y(cfg.fork_tilt);
}

RigidTransform pallet_pose(const KinematicConfig& cfg) {
    return fork_pose(cfg) * cfg.gaze_on_fork;
}

}  // namespace palletrack
