#include "palletrack/harness.hpp"

#include "palletrack/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace palletrack {

namespace {

constexpr std::uint64_t kRenderStream = 0x52454E44ull;

struct CsvRow {
    double time;
    const char* phase;
    double delta_tilt, delta_height;
    double tilt_meas, tilt_ref;
    double height;
    bool limit_switch;
    double pallet_pitch, pallet_x, surface_tilt;
    double icp_error;
    int icp_iters;
};

void append_row(std::string& csv, const CsvRow& r) {
    char buf[320];
    std::snprintf(buf, sizeof buf,
                  "%.3f,%s,%.4f,%.5f,%.4f,%.4f,%.5f,%d,%.4f,%.5f,%.4f,%.6f,%d\n", r.time,
                  r.phase, rad2deg(r.delta_tilt), r.delta_height, rad2deg(r.tilt_meas),
                  rad2deg(r.tilt_ref), r.height, r.limit_switch ? 1 : 0,
                  rad2deg(r.pallet_pitch), r.pallet_x, rad2deg(r.surface_tilt), r.icp_error,
                  r.icp_iters);
    csv += buf;
}

CsvRow row_for(const WorldState& w, const TrackerState& ts, const char* phase, double tilt_ref) {
    return {w.time,
            phase,
            ts.last_delta_tilt,
            ts.last_delta_height,
            w.fork.tilt,
            tilt_ref,
            w.fork.height,
            w.fork.limit_switch,
            w.pallet.pitch,
            w.pallet.x,
            w.surface_tilt,
            ts.last_icp_error,
            ts.last_icp_iterations};
}

}  // namespace

double start_fork_height(const Scenario& scn) {
    const WorldModel& m = scn.world;
    const double pitch = m.surface.pitch_for(update_surface_tilt(m.surface, m.surface.preload));
    const double rear = scn.reach + m.fork.pallet_heel_gap;
    const double front = rear + m.pallet.deck_length;
    const double top = std::max(m.surface.height_at(rear, pitch), m.surface.height_at(front, pitch));
    return top + scn.start_gap + m.pallet.hole_ceiling;
}

RunResult run_scenario(const Scenario& scn) {
    scn.validate();
    const WorldModel& model = scn.world;

    TrackerSetup setup;
    setup.camera_on_mast = scn.camera_on_mast;
    setup.gaze_on_fork = scn.gaze_on_fork;
    setup.mast_polyline = scn.mast_polyline;
    setup.bb = scn.bb;
    setup.icp = scn.icp;
    setup.params = scn.tracker;
    setup.params.mode = scn.control_mode;
    setup.seed = scn.seed;

    const int substeps =
        std::max(1, static_cast<int>(std::lround(scn.tracker.cycle_period / scn.plant_dt)));

    RunResult result;
    RunReport& rep = result.report;
    rep.scenario = scn.name;
    std::string& csv = result.csv;
    csv = kCsvHeader;
    csv += '\n';

    WorldState world = initial_world(model, start_fork_height(scn), scn.reach);
    std::vector<WorldState> history{world};
    TrackerState ts;
    TrackerCommands cmds{world.fork.tilt, world.fork.height};
    std::optional<WithdrawPlan> plan;
    double chassis_start = 0.0;
    double previous_s = 0.0;
    bool finished = false;
    rep.outcome = Outcome::HaltedTimeout;
    rep.switch_ever_off = !world.fork.limit_switch;

    // Wheel odometry: noisy increments that never count backwards.
    constexpr std::uint64_t kOdometryStream = 0x4F444F4Dull;
    double odo_s = 0.0;
    double odo_true = 0.0;
    std::uint64_t odo_count = 0;
    auto odometry = [&](double true_s) {
        const double step = true_s - odo_true;
        odo_true = true_s;
        const double noise =
            scn.odometry_noise > 0.0
                ? scn.odometry_noise * rng::normal(scn.seed ^ kOdometryStream, odo_count++)
                : 0.0;
        odo_s += std::max(0.0, step + noise);
        return odo_s;
    };

    while (!finished && world.time < scn.duration_limit) {
        if (!plan) {
            CameraModel cam = scn.camera;
            cam.pose = camera_pose(setup.kinematics(world.fork));
            const auto boxes = scene_boxes(world, model);
            const PointCloud cloud = render_depth(boxes, cam, rng::mix(scn.seed ^ kRenderStream, ts.cycle));
            const TrackerStep step = tracker_step(setup, ts, cloud, world.fork);
            ts = step.state;
            cmds = step.commands;
            ++rep.cycles;
            append_row(csv, row_for(world, ts, to_string(ts.phase), cmds.tilt_ref));

            if (ts.phase == Phase::Halted) {
                rep.outcome = Outcome::HaltedTimeout;
                break;
            }
            if (ts.phase == Phase::ReadyToWithdraw) {
                plan = plan_withdraw(world.fork, scn.withdraw);
                chassis_start = world.chassis_x;
                rep.converged_delta_tilt = std::abs(ts.last_delta_tilt);
                world.withdrawing = true;
                history.push_back(world);
                continue;
            }
            for (int i = 0; i < substeps; ++i) {
                ActuatorCommand ac;
                ac.tilt_ref = cmds.tilt_ref;
                ac.height_ref = cmds.height_ref;
                world = step_world(ac, scn.plant_dt, world, model);
                history.push_back(world);
                rep.switch_ever_off |= !world.fork.limit_switch;
                if (world.jam) {
                    rep.outcome = Outcome::JamFault;
                    finished = true;
                    break;
                }
            }
        } else {
            int advanced = 0;
            for (int i = 0; i < substeps && !finished; ++i) {
                const double true_s = chassis_start - world.chassis_x;
                const double s = odometry(true_s);
                const WithdrawCommand wc = withdraw_step(*plan, s, world.fork.height, previous_s);
                previous_s = s;
                if (wc.fault) {
                    rep.outcome = Outcome::JamFault;
                    finished = true;
                    break;
                }
                if (wc.done) {
                    rep.outcome = Outcome::WithdrawCompleted;
                    finished = true;
                    break;
                }
                ActuatorCommand ac;
                ac.tilt_ref = plan->start_tilt;
                ac.height_rate = wc.height_rate;
                ac.drive = wc.drive;
                world = step_world(ac, scn.plant_dt, world, model);
                world.withdrawing = true;
                history.push_back(world);
                ++advanced;
                rep.switch_ever_off |= !world.fork.limit_switch;
                const double moved = chassis_start - world.chassis_x;
                if (moved >= kWithdrawTransient) {
                    rep.withdraw_tracking_error =
                        std::max(rep.withdraw_tracking_error,
                                 std::abs(world.fork.height - plan->target_height(moved)));
                }
                if (world.jam) {
                    rep.outcome = Outcome::JamFault;
                    finished = true;
                }
            }
            if (advanced > 0) append_row(csv, row_for(world, ts, "withdraw", plan->start_tilt));
        }
    }

    rep.final_fork_tilt = world.fork.tilt;
    rep.final_surface_tilt = world.surface_tilt;
    rep.max_drag = drag_metric(history);
    rep.sim_time = world.time;
    return result;
}

std::vector<Check> evaluate(const Scenario& scn, const RunReport& r) {
    const Expectations& ex = scn.expect;
    std::vector<Check> checks;
    char buf[160];
    if (ex.outcome) {
        std::snprintf(buf, sizeof buf, "expected %s, got %s", to_string(*ex.outcome),
                      to_string(r.outcome));
        checks.push_back({"outcome", *ex.outcome == r.outcome, buf});
    }
    if (ex.max_drag_max) {
        std::snprintf(buf, sizeof buf, "%.4f m <= %.4f m", r.max_drag, *ex.max_drag_max);
        checks.push_back({"max_drag_max", r.max_drag <= *ex.max_drag_max, buf});
    }
    if (ex.max_drag_min) {
        std::snprintf(buf, sizeof buf, "%.4f m > %.4f m", r.max_drag, *ex.max_drag_min);
        checks.push_back({"max_drag_min", r.max_drag > *ex.max_drag_min, buf});
    }
    if (ex.final_tilt) {
        const double err = std::abs(r.final_fork_tilt - *ex.final_tilt);
        std::snprintf(buf, sizeof buf, "%.3f deg vs %.3f deg (tol %.2f)",
                      rad2deg(r.final_fork_tilt), rad2deg(*ex.final_tilt),
                      rad2deg(ex.final_tilt_tol));
        checks.push_back({"final_tilt", err <= ex.final_tilt_tol, buf});
    }
    if (ex.converged_delta_max) {
        const bool ok = r.converged_delta_tilt && *r.converged_delta_tilt <= *ex.converged_delta_max;
        if (r.converged_delta_tilt) {
            std::snprintf(buf, sizeof buf, "|dtilt| %.4f deg <= %.4f deg",
                          rad2deg(*r.converged_delta_tilt), rad2deg(*ex.converged_delta_max));
        } else {
            std::snprintf(buf, sizeof buf, "withdrawal never started");
        }
        checks.push_back({"converged_delta", ok, buf});
    }
    return checks;
}

bool all_pass(const std::vector<Check>& checks) {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

std::string report_json(const RunReport& r, const std::vector<Check>& checks) {
    nlohmann::ordered_json j;
    j["scenario"] = r.scenario;
    j["outcome"] = to_string(r.outcome);
    j["final_fork_tilt_deg"] = rad2deg(r.final_fork_tilt);
    j["final_surface_tilt_deg"] = rad2deg(r.final_surface_tilt);
    j["max_drag_m"] = r.max_drag;
    j["cycles"] = r.cycles;
    j["converged_delta_tilt_deg"] = nullptr;
    if (r.converged_delta_tilt) j["converged_delta_tilt_deg"] = rad2deg(*r.converged_delta_tilt);
    j["withdraw_tracking_error_m"] = r.withdraw_tracking_error;
    j["switch_ever_off"] = r.switch_ever_off;
    j["sim_time_s"] = r.sim_time;
    auto arr = nlohmann::ordered_json::array();
    for (const Check& c : checks) {
        arr.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    }
    j["checks"] = std::move(arr);
    j["pass"] = all_pass(checks);
    return j.dump(2);
}

std::vector<std::filesystem::path> suite_files(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> out;
    for (const char* name : {"case1.scn", "case2.scn", "case3.scn", "case4.scn"}) {
        out.push_back(dir / name);
    }
    return out;
}

}  // namespace palletrack
