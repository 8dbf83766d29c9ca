#include "palletrack/tracker.hpp"

#include "palletrack/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace palletrack {

const char* to_string(Phase p) {
    switch (p) {
        case Phase::CaptureSource: return "capture_source";
        case Phase::DescendAndTrack: return "descend_and_track";
        case Phase::LowerToRelease: return "lower_to_release";
        case Phase::ReadyToWithdraw: return "ready_to_withdraw";
        case Phase::Halted: return "halted";
    }
    return "?";
}

const char* to_string(ControlMode m) {
    return m == ControlMode::Proposed ? "proposed" : "no_control";
}

void TrackerParams::validate() const {
    if (!(tilt_threshold > 0.0)) throw std::invalid_argument("TrackerParams: tilt_threshold <= 0");
    if (!(cycle_period > 0.0)) throw std::invalid_argument("TrackerParams: cycle_period <= 0");
    if (!(halt_timeout > 0.0)) throw std::invalid_argument("TrackerParams: halt_timeout <= 0");
    if (!(descend_step > 0.0)) throw std::invalid_argument("TrackerParams: descend_step <= 0");
    if (release_margin < 0.0) throw std::invalid_argument("TrackerParams: release_margin < 0");
    if (target_points < 1) throw std::invalid_argument("TrackerParams: target_points < 1");
}

KinematicConfig TrackerSetup::kinematics(const ForkState& fork) const {
    KinematicConfig k;
    k.reach = fork.reach;
    k.fork_height = fork.height;
    k.fork_tilt = fork.tilt;
    k.camera_on_mast = camera_on_mast;
    k.gaze_on_fork = gaze_on_fork;
    k.mast_polyline = mast_polyline;
    return k;
}

PointCloud warm_start_source(const TrackerState& state, const KinematicConfig& now) {
    if (!state.src_cloud) throw std::logic_error("warm_start_source: no source cloud captured");
    const RigidTransform motion = camera_pose(now).inverse() * fork_pose(now) *
                                  state.capture_fork.inverse() * state.capture_camera;
    return transform_cloud(*state.src_cloud, motion, Frame::Camera);
}

TiltHeightDelta extract_delta(const RigidTransform& icp_t, const RigidTransform& origin_from_camera) {
    // C·T·C⁻¹ written around (R − I) so an exact identity maps to exact zeros
    // and small motions keep their precision.
    const Mat3& rc = origin_from_camera.rotation();
    const Vec3& tc = origin_from_camera.translation();
    const Mat3 dr = icp_t.rotation() - Mat3::Identity();
    const Mat3 r = Mat3::Identity() + rc * dr * rc.transpose();
    const Vec3 t = rc * (icp_t.translation() - dr * (rc.transpose() * tc));
    return {pitch_of(r), axis::up.dot(t)};
}

TrackerStep tracker_step(const TrackerSetup& setup, const TrackerState& state,
                         const PointCloud& measured_cloud, const ForkState& fork) {
    const TrackerParams& p = setup.params;
    p.validate();

    TrackerStep out{{state.ref_tilt, state.ref_height}, state, std::nullopt};
    TrackerState& s = out.state;
    if (s.phase == Phase::ReadyToWithdraw || s.phase == Phase::Halted) return out;

    const KinematicConfig kin = setup.kinematics(fork);
    const RigidTransform cam = camera_pose(kin);
    const RigidTransform bb_to_cam = cam.inverse() * pallet_pose(kin);
    const std::uint64_t cycle = s.cycle++;
    const std::uint64_t sample_seed = rng::mix(setup.seed, cycle);
    s.elapsed += p.cycle_period;

    if (s.phase == Phase::CaptureSource) {
        PointCloud src = random_downsample(crop_bb(measured_cloud, setup.bb, bb_to_cam),
                                           p.target_points, sample_seed);
        if (src.size() < setup.icp.min_points) {
            out.error = "capture: only " + std::to_string(src.size()) + " points in bounding box";
            return out;
        }
        s.src_cloud = std::move(src);
        s.capture_height = fork.height;
        s.capture_camera = cam;
        s.capture_fork = fork_pose(kin);
        s.ref_tilt = fork.tilt;
        s.ref_height = fork.height;
        s.phase = Phase::DescendAndTrack;
        out.commands = {s.ref_tilt, s.ref_height};
        return out;
    }

    if (s.elapsed > p.halt_timeout) {
        s.phase = Phase::Halted;
        return out;
    }

    const PointCloud warm = warm_start_source(s, kin);
    const PointCloud measured =
        random_downsample(crop_bb(measured_cloud, setup.bb.dilated(p.bb_dilation), bb_to_cam),
                          p.target_points, sample_seed ^ 0xA5A5A5A5ull);
    IcpResult icp;
    try {
        icp = icp_register(warm, measured, RigidTransform::identity(), setup.icp);
    } catch (const std::exception& e) {
        out.error = e.what();
        return out;
    }
    const TiltHeightDelta delta = extract_delta(icp.transform, cam);
    s.last_delta_tilt = delta.tilt;
    s.last_delta_height = delta.height;
    s.last_icp_error = icp.final_error;
    s.last_icp_iterations = icp.iterations;

    // Tilt and height commands alternate between cycles.
    const bool tilt_turn = cycle % 2 == 0;
    const bool misaligned =
        p.mode == ControlMode::Proposed && std::abs(delta.tilt) > p.tilt_threshold;
    if (tilt_turn && misaligned) s.ref_tilt = fork.tilt + delta.tilt;

    if (s.phase == Phase::DescendAndTrack) {
        if (!tilt_turn && fork.limit_switch) {
            s.ref_height = std::min(s.ref_height, fork.height) - p.descend_step;
        }
        if (!fork.limit_switch && !misaligned) {
            s.phase = Phase::LowerToRelease;
            s.release_height = fork.height - p.release_margin;
            s.ref_height = std::min(s.ref_height, s.release_height);
            s.release_cycles = 0;
        }
    } else if (s.phase == Phase::LowerToRelease) {
        if (fork.limit_switch || misaligned) {
            s.phase = Phase::DescendAndTrack;
        } else {
            ++s.release_cycles;
            if (fork.height <= s.release_height + p.release_tolerance ||
                s.release_cycles >= p.release_timeout_cycles) {
                s.phase = Phase::ReadyToWithdraw;
            }
        }
    }
    out.commands = {s.ref_tilt, s.ref_height};
    return out;
}

}  // namespace palletrack
