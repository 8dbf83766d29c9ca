#pragma once

#include "palletrack/cloud.hpp"
#include "palletrack/geom.hpp"
#include "palletrack/icp.hpp"
#include "palletrack/simworld.hpp"
#include "palletrack/tracker.hpp"
#include "palletrack/withdraw.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

namespace palletrack {

enum class Outcome { WithdrawCompleted, HaltedTimeout, JamFault };

const char* to_string(Outcome o);
Outcome outcome_from_string(const std::string& s);

/// Optional pass/fail expectations carried in the scenario file.
struct Expectations {
    std::optional<Outcome> outcome;
    std::optional<double> max_drag_max;  // m
    std::optional<double> max_drag_min;  // m
    std::optional<double> final_tilt;    // rad, signed
    double final_tilt_tol = deg2rad(0.5);
    std::optional<double> converged_delta_max;  // rad
};

struct Scenario {
    std::string name = "unnamed";
    WorldModel world;
    double load_mass = 0.0;  // kg, already folded into world.pallet
    CameraModel camera;      // pose is overwritten each cycle
    RigidTransform camera_on_mast;
    RigidTransform gaze_on_fork;
    MastPolyline mast_polyline;
    BoundingBox bb{Vec3(-0.6, -0.6, -0.3), Vec3(0.6, 0.6, 0.1)};
    TrackerParams tracker;
    IcpParams icp;
    WithdrawGains withdraw;
    double odometry_noise = 0.0;  // m, σ per plant step on the odometry increment
    ControlMode control_mode = ControlMode::Proposed;
    std::uint64_t seed = 1;
    double duration_limit = 60.0;  // s simulated
    double plant_dt = 0.02;        // s
    double reach = 0.5;            // m
    double start_gap = 0.04;       // m between pallet and highest surface point at start
    Expectations expect;

    void validate() const;
};

class ScenarioParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Flat `section.key = value` text; `#` starts a comment. Unknown keys are errors.
Scenario parse_scenario(const std::string& text, const std::string& origin = "<string>");
Scenario load_scenario(const std::filesystem::path& path);

}  // namespace palletrack
