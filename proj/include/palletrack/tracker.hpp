#pragma once

#include "palletrack/cloud.hpp"
#include "palletrack/geom.hpp"
#include "palletrack/icp.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace palletrack {

enum class Phase { CaptureSource, DescendAndTrack, LowerToRelease, ReadyToWithdraw, Halted };
enum class ControlMode { Proposed, NoControl };

const char* to_string(Phase p);
const char* to_string(ControlMode m);

struct TrackerParams {
    double tilt_threshold = deg2rad(0.25);
    double cycle_period = 0.2;       // s
    double halt_timeout = 30.0;      // s of tracking time
    double descend_step = 0.005;     // m per height cycle
    double release_margin = 0.006;   // m lowered after switch-off, before withdrawal
    double release_tolerance = 0.001;
    int release_timeout_cycles = 10;
    std::size_t target_points = 7000;
    double bb_dilation = 0.15;       // m, measured-cloud crop margin
    ControlMode mode = ControlMode::Proposed;

    void validate() const;
};

/// Fixed inputs of the tracker: forklift frames, crop box and ICP settings.
struct TrackerSetup {
    RigidTransform camera_on_mast;
    RigidTransform gaze_on_fork;
    MastPolyline mast_polyline;
    BoundingBox bb{Vec3(-0.6, -0.6, -0.3), Vec3(0.6, 0.6, 0.1)};  // gaze frame
    IcpParams icp;
    TrackerParams params;
    std::uint64_t seed = 0;

    KinematicConfig kinematics(const ForkState& fork) const;
};

struct TrackerState {
    Phase phase = Phase::CaptureSource;
    std::optional<PointCloud> src_cloud;  // camera frame at capture
    double capture_height = 0.0;
    RigidTransform capture_camera;  // origin ← camera at capture
    RigidTransform capture_fork;    // origin ← fork heel at capture
    double ref_tilt = 0.0;
    double ref_height = 0.0;
    double last_delta_tilt = 0.0;
    double last_delta_height = 0.0;
    double last_icp_error = 0.0;
    int last_icp_iterations = 0;
    double release_height = 0.0;
    int release_cycles = 0;
    double elapsed = 0.0;
    std::uint64_t cycle = 0;
};

struct TrackerCommands {
    double tilt_ref = 0.0;
    double height_ref = 0.0;
};

struct TrackerStep {
    TrackerCommands commands;
    TrackerState state;
    std::optional<std::string> error;  // set when the cycle was skipped
};

struct TiltHeightDelta {
    double tilt = 0.0;    // rad, pallet pitch relative to the fork
    double height = 0.0;  // m
};

/// Source cloud moved, in the current camera frame, by the motion the fork has
/// made since capture: camera_now⁻¹ · fork_now · fork_capture⁻¹ · camera_capture.
PointCloud warm_start_source(const TrackerState& state, const KinematicConfig& now);

/// Re-expresses a camera-frame ICP motion in the origin frame and reads off
/// pitch about y and vertical displacement.
TiltHeightDelta extract_delta(const RigidTransform& icp_t, const RigidTransform& origin_from_camera);

/// One 5 Hz control cycle. `measured_cloud` is the raw camera-frame depth cloud.
TrackerStep tracker_step(const TrackerSetup& setup, const TrackerState& state,
                         const PointCloud& measured_cloud, const ForkState& fork);

}  // namespace palletrack
