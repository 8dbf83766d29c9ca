#include "palletrack/cloud.hpp"

#include "palletrack/rng.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace palletrack {

const char* to_string(Frame f) {
    switch (f) {
        case Frame::Origin: return "origin";
        case Frame::Camera: return "camera";
    }
    return "?";
}

PointCloud::PointCloud(Frame frame, std::vector<Vec3> points)
    : frame_(frame), points_(std::move(points)) {
    for (const auto& p : points_) {
        if (!p.allFinite()) throw std::invalid_argument("PointCloud: non-finite coordinate");
    }
}

BoundingBox::BoundingBox(const Vec3& min_c, const Vec3& max_c)
    : min_corner(min_c), max_corner(max_c) {
    if (!(min_corner.array() < max_corner.array()).all()) {
        throw std::invalid_argument("BoundingBox: min_corner must be < max_corner componentwise");
    }
}

bool BoundingBox::contains(const Vec3& p) const {
    return (p.array() >= min_corner.array()).all() && (p.array() <= max_corner.array()).all();
}

BoundingBox BoundingBox::dilated(double margin) const {
    const Vec3 m = Vec3::Constant(margin);
    return {min_corner - m, max_corner + m};
}

void CameraModel::validate() const {
    if (width < 8 || height < 8) throw std::invalid_argument("CameraModel: resolution below 8 px");
    if (!(fov_h > 0.0 && fov_h < std::numbers::pi) || !(fov_v > 0.0 && fov_v < std::numbers::pi)) {
        throw std::invalid_argument("CameraModel: field of view must be in (0, pi)");
    }
    if (!(depth_noise_sigma >= 0.0)) throw std::invalid_argument("CameraModel: negative noise");
}

Vec3 CameraModel::pixel_ray(int u, int v) const {
    const double tx = std::tan(0.5 * fov_h);
    const double ty = std::tan(0.5 * fov_v);
    const double x = ((u + 0.5) / width - 0.5) * 2.0 * tx;
    const double y = ((v + 0.5) / height - 0.5) * 2.0 * ty;
    return {x, y, 1.0};
}

PointCloud crop_bb(const PointCloud& cloud, const BoundingBox& bb,
                   const RigidTransform& bb_to_cloud_frame) {
    const RigidTransform to_bb = bb_to_cloud_frame.inverse();
    std::vector<Vec3> kept;
    kept.reserve(cloud.size());
    for (const auto& p : cloud.points()) {
        if (bb.contains(to_bb.apply(p))) kept.push_back(p);
    }
    return {cloud.frame(), std::move(kept)};
}

PointCloud random_downsample(const PointCloud& cloud, std::size_t target_n, std::uint64_t seed) {
    if (target_n < 1) throw std::invalid_argument("random_downsample: target_n must be >= 1");
    const std::size_t n = cloud.size();
    if (n <= target_n) return cloud;

    // Partial Fisher-Yates over indices, then restore input order.
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    rng::Stream stream(seed);
    for (std::size_t i = 0; i < target_n; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(stream.below(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(target_n);
    std::sort(idx.begin(), idx.end());

    std::vector<Vec3> out;
    out.reserve(target_n);
    for (auto i : idx) out.push_back(cloud[i]);
    return {cloud.frame(), std::move(out)};
}

PointCloud transform_cloud(const PointCloud& cloud, const RigidTransform& t, Frame new_frame) {
    std::vector<Vec3> out;
    out.reserve(cloud.size());
    for (const auto& p : cloud.points()) out.push_back(t.apply(p));
    return {new_frame, std::move(out)};
}

double ray_box_distance(const Vec3& origin, const Vec3& dir, const OrientedBox& box) {
    const Mat3& r = box.pose.rotation();
    const Vec3 o = r.transpose() * (origin - box.pose.translation());
    const Vec3 d = r.transpose() * dir;
    double t_near = -std::numeric_limits<double>::infinity();
    double t_far = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 3; ++k) {
        const double h = box.half_extents[k];
        if (d[k] == 0.0) {
            if (o[k] < -h || o[k] > h) return -1.0;
            continue;
        }
        double t0 = (-h - o[k]) / d[k];
        double t1 = (h - o[k]) / d[k];
        if (t0 > t1) std::swap(t0, t1);
        t_near = std::max(t_near, t0);
        t_far = std::min(t_far, t1);
        if (t_near > t_far) return -1.0;
    }
    if (t_far < 0.0) return -1.0;
    return t_near >= 0.0 ? t_near : -1.0;  // camera inside a box sees nothing of it
}

PointCloud render_depth(std::span<const OrientedBox> scene, const CameraModel& cam,
                        std::uint64_t seed) {
    cam.validate();
    if (scene.empty()) throw std::invalid_argument("render_depth: empty scene");

    const Vec3 origin = cam.pose.translation();
    const Mat3& r = cam.pose.rotation();
    std::vector<Vec3> points;
    points.reserve(static_cast<std::size_t>(cam.width) * cam.height);

    for (int v = 0; v < cam.height; ++v) {
        for (int u = 0; u < cam.width; ++u) {
            const Vec3 ray_cam = cam.pixel_ray(u, v);
            const Vec3 ray = r * ray_cam;
            double best = std::numeric_limits<double>::infinity();
            for (const auto& box : scene) {
                const double t = ray_box_distance(origin, ray, box);
                if (t >= 0.0 && t < best) best = t;
            }
            if (!std::isfinite(best)) continue;
            if (cam.depth_noise_sigma > 0.0) {
                const std::uint64_t pixel = static_cast<std::uint64_t>(v) * cam.width + u;
                best += cam.depth_noise_sigma * rng::normal(seed, pixel) / ray_cam.norm();
            }
            points.push_back(best * ray_cam);
        }
    }
    return {Frame::Camera, std::move(points)};
}

void write_xyz(std::ostream& os, const PointCloud& cloud) {
    const auto flags = os.flags();
    const auto prec = os.precision();
    os << std::setprecision(9);
    for (const auto& p : cloud.points()) os << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
    os.flags(flags);
    os.precision(prec);
}

PointCloud read_xyz(std::istream& is, Frame frame) {
    std::vector<Vec3> pts;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream row(line);
        double x, y, z;
        if (!(row >> x >> y >> z)) {
            throw std::runtime_error("read_xyz: malformed row " + std::to_string(lineno));
        }
        pts.emplace_back(x, y, z);
    }
    return {frame, std::move(pts)};
}

}  // namespace palletrack
