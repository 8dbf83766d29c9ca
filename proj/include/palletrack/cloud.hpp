#pragma once

#include "palletrack/geom.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace palletrack {

enum class Frame { Origin, Camera };

const char* to_string(Frame f);

/// Points in metres, tagged with the frame they are expressed in.
class PointCloud {
public:
    explicit PointCloud(Frame frame) : frame_(frame) {}
    /// Throws std::invalid_argument on non-finite coordinates.
    PointCloud(Frame frame, std::vector<Vec3> points);

    Frame frame() const { return frame_; }
    const std::vector<Vec3>& points() const { return points_; }
    std::size_t size() const { return points_.size(); }
    bool empty() const { return points_.empty(); }
    const Vec3& operator[](std::size_t i) const { return points_[i]; }

private:
    Frame frame_;
    std::vector<Vec3> points_;
};

struct BoundingBox {
    Vec3 min_corner;
    Vec3 max_corner;

    BoundingBox(const Vec3& min_corner, const Vec3& max_corner);
    bool contains(const Vec3& p) const;
    BoundingBox dilated(double margin) const;
};

/// Pinhole depth camera. Optical frame: x right, y down, z along the view ray.
struct CameraModel {
    int width = 160;
    int height = 144;
    double fov_h = deg2rad(75.0);
    double fov_v = deg2rad(65.0);
    RigidTransform pose;  // origin ← camera
    double depth_noise_sigma = 0.002;

    void validate() const;
    /// Unnormalised ray direction (z = 1) through the centre of pixel (u, v).
    Vec3 pixel_ray(int u, int v) const;
};

/// Box primitive for the synthetic renderer: pose maps box-local to origin.
struct OrientedBox {
    RigidTransform pose;
    Vec3 half_extents;
};

/// Points inside `bb`; `bb_to_cloud_frame` maps box coordinates into the cloud frame.
PointCloud crop_bb(const PointCloud& cloud, const BoundingBox& bb,
                   const RigidTransform& bb_to_cloud_frame);

/// Uniform sample of `target_n` points without replacement, input order kept.
PointCloud random_downsample(const PointCloud& cloud, std::size_t target_n, std::uint64_t seed);

PointCloud transform_cloud(const PointCloud& cloud, const RigidTransform& t, Frame new_frame);

/// Ray-cast one ray per pixel; nearest hit in camera frame, depth noise along the ray.
PointCloud render_depth(std::span<const OrientedBox> scene, const CameraModel& cam,
                        std::uint64_t seed);

/// Distance along `dir` from `origin` to the box surface, or a negative value.
double ray_box_distance(const Vec3& origin, const Vec3& dir, const OrientedBox& box);

// ASCII XYZ: one "x y z" row per point, 9 significant digits.
void write_xyz(std::ostream& os, const PointCloud& cloud);
PointCloud read_xyz(std::istream& is, Frame frame);

}  // namespace palletrack
