// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "palletrack/harness.hpp"
#include "palletrack/icp.hpp"
#include "palletrack/tracker.hpp"
#include "palletrack/withdraw.hpp"
#include "synthetic.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <algorithm>
#include <map>
#include <sstream>
#include <string>

using namespace palletrack;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, const char* what, bool pass, const std::string& detail) {
    std::printf("[%s] %d %s: %s\n", pass ? "PASS" : "FAIL", id, what, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

template <typename... A>
std::string fmt(const char* f, A... a) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, a...);
    return buf;
}

// --- 1: ICP accuracy and speed ---------------------------------------------

void icp_criterion() {
    const Vec3 centroid(0, 0, 1.5);
    rng::Stream motions(2024);
    int noisy_ok = 0, clean_ok = 0;
    double worst_ms = 0.0, worst_clean_rot = 0.0, worst_clean_shift = 0.0;
    for (std::uint64_t trial = 0; trial < 100; ++trial) {
        const RigidTransform g = fixtures::random_motion(motions, deg2rad(5.0), 0.05, centroid);
        const PointCloud src = fixtures::load_top(7000, 100 + trial);
        const PointCloud clean = transform_cloud(src, g, Frame::Camera);
        const PointCloud noisy = fixtures::add_noise(clean, 0.002, 900 + trial);

        auto t0 = Clock::now();
        const IcpResult rn = icp_register(src, noisy, {}, {});
        worst_ms = std::max(worst_ms, ms_since(t0));
        if (rad2deg(RigidTransform::angle_between(rn.transform, g)) <= 0.1 &&
            (rn.transform.translation() - g.translation()).norm() <= 0.005) {
            ++noisy_ok;
        }

        t0 = Clock::now();
        const IcpResult rc = icp_register(src, clean, {}, {});
        worst_ms = std::max(worst_ms, ms_since(t0));
        const double rot = rad2deg(RigidTransform::angle_between(rc.transform, g));
        const double shift = (rc.transform.translation() - g.translation()).norm();
        worst_clean_rot = std::max(worst_clean_rot, rot);
        worst_clean_shift = std::max(worst_clean_shift, shift);
        if (rot <= 0.05 && shift <= 0.002) ++clean_ok;
    }
    report(1, "ICP registration", noisy_ok >= 95 && clean_ok == 100 && worst_ms <= 200.0,
           fmt("noisy %d/100 within 0.1 deg/5 mm, noise-free %d/100 (worst %.4f deg, %.5f m), "
               "slowest %.1f ms",
               noisy_ok, clean_ok, worst_clean_rot, worst_clean_shift, worst_ms));
}

// --- 2: delta extraction closed forms ----------------------------------------

void extract_criterion() {
    const RigidTransform origin_from_camera =
        RigidTransform::translation(-0.1, 0.0, 2.2) * RigidTransform::rot_y(deg2rad(60.0));
    double worst_tilt = 0.0, worst_height = 0.0;
    for (int i = -50; i <= 50; ++i) {
        const double a = deg2rad(0.1 * i);
        // Camera-frame transform whose origin-frame form is exactly Ry(a).
        const RigidTransform in_origin = RigidTransform::rot_y(a);
        const RigidTransform icp_t = origin_from_camera.inverse() * in_origin * origin_from_camera;
        const TiltHeightDelta d = extract_delta(icp_t, origin_from_camera);
        worst_tilt = std::max(worst_tilt, std::abs(d.tilt - a));
        worst_height = std::max(worst_height, std::abs(d.height));
    }
    bool exact = true;
    for (double dz : {-0.05, -0.02, 0.0, 0.01, 0.03}) {
        const RigidTransform icp_t =
            origin_from_camera.inverse() * RigidTransform::translation(0, 0, dz) * origin_from_camera;
        const TiltHeightDelta d = extract_delta(icp_t, origin_from_camera);
        exact &= std::abs(d.height - dz) <= 1e-12 && std::abs(d.tilt) <= 1e-12;
    }
    const TiltHeightDelta id = extract_delta(RigidTransform::identity(), origin_from_camera);
    exact &= id.tilt == 0.0 && id.height == 0.0;
    report(2, "tilt/height extraction", worst_tilt <= 1e-9 && worst_height <= 1e-9 && exact,
           fmt("Ry sweep -5..5 deg worst tilt error %.2e rad, height leak %.2e m; "
               "vertical shifts %s",
               worst_tilt, worst_height, exact ? "exact" : "inexact"));
}

// --- 3..5, 8: the four unloading cases ---------------------------------------

struct CaseRun {
    Scenario scn;
    RunResult result;
    double wall_s = 0.0;
};

std::map<std::string, CaseRun> run_suite() {
    std::map<std::string, CaseRun> out;
    for (const auto& path : suite_files(PALLETRACK_SCENARIO_DIR)) {
        CaseRun c;
        c.scn = load_scenario(path);
        const auto t0 = Clock::now();
        c.result = run_scenario(c.scn);
        c.wall_s = ms_since(t0) / 1000.0;
        out[path.stem().string()] = std::move(c);
    }
    return out;
}

void convergence_criterion(const std::map<std::string, CaseRun>& runs) {
    bool pass = true;
    std::string detail;
    for (const char* name : {"case1", "case3"}) {
        const auto& d = runs.at(name).result.report.converged_delta_tilt;
        const bool ok = d && std::abs(rad2deg(*d)) <= 0.25;
        pass &= ok;
        detail += fmt("%s |dtilt| %s deg  ", name, d ? fmt("%.3f", std::abs(rad2deg(*d))).c_str() : "n/a");
    }
    report(3, "tilt converged before withdrawal", pass, detail);
}

void final_tilt_criterion(const std::map<std::string, CaseRun>& runs) {
    bool pass = true;
    std::string detail;
    for (auto [name, surface] : {std::pair{"case1", -4.0}, std::pair{"case3", 2.0}}) {
        const double tilt = rad2deg(runs.at(name).result.report.final_fork_tilt);
        const bool ok = std::abs(tilt - surface) <= 0.5;
        pass &= ok;
        detail += fmt("%s fork %.2f deg vs surface %.1f  ", name, tilt, surface);
    }
    report(4, "final fork tilt matches the surface", pass, detail);
}

void outcome_criterion(const std::map<std::string, CaseRun>& runs) {
    const auto& c1 = runs.at("case1").result.report;
    const auto& c2 = runs.at("case2").result.report;
    const auto& c3 = runs.at("case3").result.report;
    const auto& c4 = runs.at("case4").result.report;
    bool pass = c1.outcome == Outcome::WithdrawCompleted && c1.max_drag <= 0.010 &&
                c2.outcome == Outcome::HaltedTimeout && !c2.switch_ever_off &&
                c3.outcome == Outcome::WithdrawCompleted && c3.max_drag <= 0.010 &&
                c4.outcome == Outcome::WithdrawCompleted && c4.max_drag > 0.050;
    double slowest = 0.0;
    for (const auto& [name, r] : runs) slowest = std::max(slowest, r.wall_s);
    pass &= slowest <= 10.0;
    report(5, "outcome matrix", pass,
           fmt("case1 %s %.1f mm, case2 %s switch_off=%d, case3 %s %.1f mm, case4 %s %.1f mm; "
               "slowest %.2f s",
               to_string(c1.outcome), 1000 * c1.max_drag, to_string(c2.outcome),
               int(c2.switch_ever_off), to_string(c3.outcome), 1000 * c3.max_drag,
               to_string(c4.outcome), 1000 * c4.max_drag, slowest));
}

// --- 6: surface tilt map -------------------------------------------------------

void surface_map_criterion() {
    SurfaceModel s;
    s.tilt_vs_load = {{0.0, 0.0}, {1500.0, deg2rad(3.0)}, {2000.0, deg2rad(4.0)}};
    const double at1500 = rad2deg(update_surface_tilt(s, 1500.0));
    const double at2000 = rad2deg(update_surface_tilt(s, 2000.0));
    const double at1750 = rad2deg(update_surface_tilt(s, 1750.0));
    const bool pass = at1500 == 3.0 && at2000 == 4.0 && std::abs(at1750 - 3.5) <= 1e-12;
    report(6, "surface tilt vs load", pass,
           fmt("1500 kg -> %.12g deg, 2000 kg -> %.12g deg, 1750 kg -> %.12g deg", at1500, at2000,
               at1750));
}

// --- 7: withdrawal height tracking ---------------------------------------------

void withdraw_criterion() {
    const PlantActuators act;
    double worst = 0.0;
    bool finished = true;
    for (int i = -8; i <= 8; ++i) {
        const double tilt_deg = 0.5 * i;
        WorldState w;
        w.fork.height = 1.1;
        w.fork.tilt = deg2rad(tilt_deg);
        const WithdrawPlan p = plan_withdraw(w.fork);
        double prev = 0.0;
        bool done = false;
        for (int k = 0; k < 100000 && !done; ++k) {
            const double s = -w.chassis_x;
            const WithdrawCommand c = withdraw_step(p, s, w.fork.height, prev);
            prev = s;
            if (c.fault) break;
            done = c.done;
            if (done) break;
            ActuatorCommand ac;
            ac.tilt_ref = p.start_tilt;
            ac.height_rate = c.height_rate;
            ac.drive = c.drive;
            w = actuate(ac, 0.02, w, act);
            if (-w.chassis_x >= kWithdrawTransient) {
                worst = std::max(worst, std::abs(w.fork.height - p.target_height(-w.chassis_x)));
            }
        }
        finished &= done;
    }
    report(7, "withdrawal height tracking", finished && worst <= 0.005,
           fmt("tilt -4..4 deg, worst error after %.1f m: %.2f mm", kWithdrawTransient, 1000 * worst));
}

// --- 8: determinism --------------------------------------------------------------

void determinism_criterion(const std::map<std::string, CaseRun>& first) {
    const auto second = run_suite();
    int same = 0;
    for (const auto& [name, r] : first) {
        if (r.result.csv == second.at(name).result.csv) ++same;
    }
    report(8, "seeded runs are byte-identical", same == static_cast<int>(first.size()),
           fmt("%d/%zu CSV logs identical across two suite runs", same, first.size()));
}

// --- 9: invariants -----------------------------------------------------------------

std::vector<std::vector<std::string>> csv_rows(const std::string& csv) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        rows.push_back(std::move(f));
    }
    return rows;
}

void invariants_criterion(const std::map<std::string, CaseRun>& runs) {
    std::vector<std::string> broken;

    // Transform chains stay orthonormal.
    rng::Stream r(77);
    RigidTransform chain = RigidTransform::identity();
    for (int k = 0; k < 10000; ++k) chain = fixtures::random_motion(r, 0.3, 0.1) * chain;
    if (chain.orthonormality_error() > 1e-9 || std::abs(chain.rotation().determinant() - 1.0) > 1e-9) {
        broken.push_back("orthonormality");
    }

    // Composition is associative.
    for (int k = 0; k < 100; ++k) {
        const RigidTransform a = fixtures::random_motion(r, 3.0, 2.0);
        const RigidTransform b = fixtures::random_motion(r, 3.0, 2.0);
        const RigidTransform c = fixtures::random_motion(r, 3.0, 2.0);
        if (((a * b) * c).matrix().isApprox((a * (b * c)).matrix(), 1e-12) == false) {
            broken.push_back("associativity");
            break;
        }
    }

    // Downsampling is a deterministic, order-preserving subset.
    const PointCloud big = fixtures::load_top(20000, 5);
    const PointCloud small = random_downsample(big, 7000, 6);
    if (small.points() != random_downsample(big, 7000, 6).points()) broken.push_back("downsample determinism");
    std::size_t j = 0;
    for (std::size_t i = 0; i < small.size(); ++i) {
        while (j < big.size() && big[j] != small[i]) ++j;
        if (j == big.size()) {
            broken.push_back("downsample subset");
            break;
        }
        ++j;
    }

    // ICP error never rises; identity input stays at identity.
    const PointCloud src = fixtures::load_top(3000, 8);
    const IcpResult self = icp_register(src, src, {}, {});
    if (!(self.transform.matrix() == RigidTransform::identity().matrix())) broken.push_back("icp identity");
    const IcpResult moved = icp_register(
        src, fixtures::add_noise(transform_cloud(src, RigidTransform::rot_x(0.05), Frame::Camera), 0.002, 9),
        {}, {});
    for (std::size_t k = 1; k < moved.error_history.size(); ++k) {
        if (moved.error_history[k] > moved.error_history[k - 1]) broken.push_back("icp monotone");
    }
    // Moving both clouds by g conjugates the answer by g.
    const RigidTransform g = fixtures::random_motion(r, 1.0, 1.0);
    const IcpResult base = icp_register(src, transform_cloud(src, RigidTransform::rot_y(0.04), Frame::Camera), {}, {});
    const IcpResult both = icp_register(
        transform_cloud(src, g, Frame::Camera),
        transform_cloud(transform_cloud(src, RigidTransform::rot_y(0.04), Frame::Camera), g, Frame::Camera), {}, {});
    if ((both.transform.matrix() - (g * base.transform * g.inverse()).matrix()).cwiseAbs().maxCoeff() > 1e-6) {
        broken.push_back("icp equivariance");
    }

    // Closed-loop logs: legal phase moves, tilt reference frozen without control.
    const std::map<std::string, std::vector<std::string>> next = {
        {"capture_source", {"capture_source", "descend_and_track"}},
        {"descend_and_track", {"descend_and_track", "lower_to_release", "halted"}},
        {"lower_to_release", {"lower_to_release", "descend_and_track", "ready_to_withdraw", "halted"}},
        {"ready_to_withdraw", {"withdraw"}},
        {"withdraw", {"withdraw"}},
        {"halted", {}},
    };
    for (const auto& [name, run] : runs) {
        const auto rows = csv_rows(run.result.csv);
        for (std::size_t k = 1; k < rows.size(); ++k) {
            const auto& allowed = next.at(rows[k - 1][1]);
            if (std::find(allowed.begin(), allowed.end(), rows[k][1]) == allowed.end()) {
                broken.push_back(name + " phase " + rows[k - 1][1] + "->" + rows[k][1]);
                break;
            }
        }
        for (const auto& row : rows) {
            if (row[1] != "descend_and_track" && row[1] != "lower_to_release") continue;
            if (run.scn.control_mode == ControlMode::NoControl && std::stod(row[5]) != 0.0) {
                broken.push_back(name + " tilt ref moved without control");
                break;
            }
        }
    }

    // Contact model over a level-fork descent onto the case 1 bed: nothing
    // below the surface, blades stay in the slot, pitch difference within the
    // clearance bound, switch agrees with the resolved heel force.
    const Scenario& c1 = runs.at("case1").scn;
    const WorldModel& m = c1.world;
    WorldState w = initial_world(m, start_fork_height(c1), c1.reach);
    ActuatorCommand cmd;
    cmd.tilt_ref = 0.0;
    cmd.height_ref = w.fork.height - 0.3;
    std::vector<std::string> contact;
    for (int k = 0; k < 300 && contact.empty(); ++k) {
        w = step_world(cmd, 0.02, w, m);
        if (w.jam) break;
        const double c = std::cos(w.pallet.pitch), s = std::sin(w.pallet.pitch);
        for (double a : {0.0, m.pallet.deck_length}) {
            if (w.pallet.z - a * s - m.surface.height_at(w.pallet.x + a * c, w.surface_tilt) < -1e-6) {
                contact.push_back("interpenetration");
            }
        }
        double first = -1.0, last = -1.0;
        for (int i = 0; i <= 400; ++i) {
            const double bs = m.fork.blade_length * i / 400;
            const double px = w.heel_x() + bs * std::cos(w.fork.tilt) - w.pallet.x;
            const double pz = w.fork.height - bs * std::sin(w.fork.tilt) - w.pallet.z;
            const double along = c * px - s * pz;
            const double up = s * px + c * pz;
            if (along < 0.0 || along > m.pallet.deck_length) continue;
            if (first < 0.0) first = bs;
            last = bs;
            if (up > m.pallet.hole_ceiling + 1e-6 ||
                up < m.pallet.hole_ceiling - m.pallet.hole_clearance - 1e-6) {
                contact.push_back("blade outside slot");
                break;
            }
        }
        const double span = last - first;
        if (w.contacts.blade_in_hole && span > 0.1 &&
            std::abs(w.pallet.pitch - w.fork.tilt) >
                std::asin(std::min(1.0, 2.0 * m.pallet.hole_clearance / span)) + 1e-9) {
            contact.push_back("clearance bound");
        }
        if (w.fork.limit_switch != (w.contacts.heel_load > kSwitchThreshold)) {
            contact.push_back("switch consistency");
        }
    }
    broken.insert(broken.end(), contact.begin(), contact.end());

    std::string detail = broken.empty() ? "transforms, downsampling, ICP (monotone, identity, "
                                          "equivariance), phase graph and contact model hold"
                                        : "broken:";
    for (const auto& b : broken) detail += " " + b;
    report(9, "invariants", broken.empty(), detail);
}

}  // namespace

int main() {
    try {
        icp_criterion();
        extract_criterion();
        const auto runs = run_suite();
        convergence_criterion(runs);
        final_tilt_criterion(runs);
        outcome_criterion(runs);
        surface_map_criterion();
        withdraw_criterion();
        determinism_criterion(runs);
        invariants_criterion(runs);
    } catch (const std::exception& e) {
        std::printf("[FAIL] aborted: %s\n", e.what());
        return 2;
    }
    std::printf("%s: %d criterion(s) failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
