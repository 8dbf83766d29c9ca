#pragma once

#include <Eigen/Dense>

#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace palletrack {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

constexpr double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

// Chassis axes: x forward, y lateral-left, z up. Fork tilt is a right-handed
// rotation about +y, so a positive tilt lowers the fork tip.
namespace axis {
inline const Vec3 forward = Vec3::UnitX();
inline const Vec3 lateral = Vec3::UnitY();
inline const Vec3 up = Vec3::UnitZ();
}  // namespace axis

class DomainError : public std::domain_error {
public:
    DomainError(const std::string& what, double value)
        : std::domain_error(what), value_(value) {}
    double value() const { return value_; }

private:
    double value_;
};

/// Proper rigid motion: orthonormal rotation with det +1, translation in metres.
class RigidTransform {
public:
    RigidTransform();
    /// Throws std::invalid_argument unless `rotation` is within 1e-6 of a proper
    /// rotation; small drift is removed by polar decomposition.
    RigidTransform(const Mat3& rotation, const Vec3& translation);

    static RigidTransform identity() { return {}; }
    static RigidTransform from_matrix(const Mat4& m);
    static RigidTransform translation(double x, double y, double z);
    static RigidTransform translation(const Vec3& t);
    static RigidTransform rot_x(double angle);
    static RigidTransform rot_y(double angle);
    static RigidTransform rot_z(double angle);
    static RigidTransform rotation_about(const Vec3& axis, double angle);

    const Mat3& rotation() const { return rotation_; }
    const Vec3& translation() const { return translation_; }
    Mat4 matrix() const;

    RigidTransform inverse() const;
    RigidTransform operator*(const RigidTransform& rhs) const;

    Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }
    Vec3 apply_vector(const Vec3& v) const { return rotation_ * v; }

    /// ‖RᵀR − I‖∞ of the stored rotation.
    double orthonormality_error() const;
    /// Rotation angle (rad) of the relative motion between two transforms.
    static double angle_between(const RigidTransform& a, const RigidTransform& b);

private:
    void enforce_orthonormal();

    Mat3 rotation_;
    Vec3 translation_;
};

RigidTransform compose(const RigidTransform& a, const RigidTransform& b);

// Re-orthonormalization threshold on ‖RᵀR − I‖∞.
inline constexpr double kOrthonormalDrift = 1e-10;

/// Pitch about +y read off a rotation: atan2(e_xᵀ R e_z, e_zᵀ R e_z).
double pitch_of(const Mat3& r);

/// Inner-mast displacement as a function of fork height: two linear segments.
class MastPolyline {
public:
    /// Default linkage: slope 1 up to 0.3 m, slope 0.5 above, domain [0, 6] m.
    MastPolyline();
    /// Exactly three breakpoints (fork_height, mast_disp), strictly increasing in
    /// height, with slope 0.5 on the second segment.
    explicit MastPolyline(std::vector<std::pair<double, double>> breakpoints);

    const std::vector<std::pair<double, double>>& breakpoints() const { return breakpoints_; }
    double min_height() const { return breakpoints_.front().first; }
    double max_height() const { return breakpoints_.back().first; }

private:
    std::vector<std::pair<double, double>> breakpoints_;
};

double mast_from_height(double fork_height, const MastPolyline& polyline);

/// Joint values plus the constant frames of the reach-truck chain.
struct KinematicConfig {
    double reach = 0.0;
    double fork_height = 0.0;
    double fork_tilt = 0.0;
    RigidTransform camera_on_mast;
    RigidTransform gaze_on_fork;
    MastPolyline mast_polyline;
};

/// Measured plant state as reported by the fork sensors.
struct ForkState {
    double height = 0.0;
    double reach = 0.0;
    double tilt = 0.0;
    bool limit_switch = true;
};

/// Origin ← camera: reach · inner mast · mounting.
RigidTransform camera_pose(const KinematicConfig& cfg);
/// Origin ← fork heel (tilt pivot), without the gaze offset.
RigidTransform fork_pose(const KinematicConfig& cfg);
/// Origin ← gaze point on the fork: reach · height · tilt · gaze.
RigidTransform pallet_pose(const KinematicConfig& cfg);

}  // namespace palletrack
