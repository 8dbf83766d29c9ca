#include "palletrack/harness.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <sstream>

using namespace palletrack;

namespace {

const std::filesystem::path kDir = PALLETRACK_SCENARIO_DIR;

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

}  // namespace

TEST_CASE("parse_scenario: defaults, comments and units") {
    const Scenario s = parse_scenario(R"(
# comment line
name = demo   # trailing comment
control_mode = no_control
seed = 9
surface.incline = down
surface.tilt_vs_load = 0:1, 1000:2
tracker.tilt_threshold_deg = 0.5
load.mass_kg = 300
pallet.mass_kg = 20
expect.outcome = jam_fault
expect.final_tilt_deg = 2
)");
    CHECK(s.name == "demo");
    CHECK(s.control_mode == ControlMode::NoControl);
    CHECK(s.tracker.mode == ControlMode::NoControl);
    CHECK(s.seed == 9);
    CHECK(s.world.surface.incline == Incline::Down);
    REQUIRE(s.world.surface.tilt_vs_load.size() == 2);
    CHECK(s.world.surface.tilt_vs_load[1].second == deg2rad(2.0));
    CHECK(s.tracker.tilt_threshold == deg2rad(0.5));
    CHECK(s.world.pallet.mass == 320.0);
    CHECK(*s.expect.outcome == Outcome::JamFault);
    CHECK(*s.expect.final_tilt == deg2rad(2.0));
    CHECK(!s.expect.max_drag_max);
}

TEST_CASE("parse_scenario: errors name the line") {
    auto msg = [](const std::string& text) {
        try {
            parse_scenario(text, "x.scn");
        } catch (const ScenarioParseError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(msg("name = a\nsurface.bogus = 1\n").find("x.scn:2") != std::string::npos);
    CHECK(msg("seed = 1\nseed = 2\n").find("duplicate") != std::string::npos);
    CHECK(msg("seed = -1\n").find("integer") != std::string::npos);
    CHECK(msg("surface.preload_kg = lots\n").find("non-numeric") != std::string::npos);
    CHECK(msg("just words\n").find("key = value") != std::string::npos);
    CHECK(msg("control_mode = maybe\n").find("control_mode") != std::string::npos);
    CHECK(msg("duration_limit_s = 0\n").find("duration_limit") != std::string::npos);
    CHECK(msg("bb.min_m = 1, 2\n").find("three") != std::string::npos);
    CHECK(msg("expect.outcome = fine\n").find("outcome") != std::string::npos);
    CHECK_THROWS_AS(load_scenario(kDir / "does_not_exist.scn"), ScenarioParseError);
}

TEST_CASE("bundled scenarios parse") {
    for (const char* f : {"case1.scn", "case2.scn", "case3.scn", "case4.scn", "flat.scn"}) {
        CAPTURE(f);
        CHECK_NOTHROW(load_scenario(kDir / f));
    }
    CHECK(load_scenario(kDir / "case2.scn").control_mode == ControlMode::NoControl);
    CHECK(suite_files(kDir).size() == 4);
}

TEST_CASE("flat ground: descends, releases, withdraws with the tilt untouched") {
    const Scenario scn = load_scenario(kDir / "flat.scn");
    const RunResult r = run_scenario(scn);
    CHECK(r.report.outcome == Outcome::WithdrawCompleted);
    CHECK(r.report.final_fork_tilt == 0.0);
    CHECK(r.report.max_drag <= 0.01);
    CHECK(all_pass(evaluate(scn, r.report)));

    std::istringstream in(r.csv);
    std::string line;
    std::getline(in, line);
    CHECK(line == kCsvHeader);
    const auto cols = split(line, ',');
    CHECK(cols.size() == 13);
    double prev_height = 1e9;
    bool saw_ready = false;
    while (std::getline(in, line)) {
        const auto f = split(line, ',');
        REQUIRE(f.size() == cols.size());
        CHECK(std::stod(f[5]) == 0.0);  // tilt reference
        if (f[1] == "descend_and_track") {
            CHECK(std::stod(f[6]) <= prev_height + 1e-9);
            prev_height = std::stod(f[6]);
        }
        saw_ready |= f[1] == "ready_to_withdraw";
    }
    CHECK(saw_ready);
}

TEST_CASE("same seed, same CSV; new seed, new CSV") {
    const Scenario scn = load_scenario(kDir / "flat.scn");
    const std::string a = run_scenario(scn).csv;
    CHECK(a == run_scenario(scn).csv);
    Scenario other = scn;
    other.seed = scn.seed + 1;
    CHECK(a != run_scenario(other).csv);
}

TEST_CASE("odometry noise never drives the distance backwards") {
    Scenario scn = load_scenario(kDir / "flat.scn");
    scn.odometry_noise = 0.002;
    const RunResult r = run_scenario(scn);
    CHECK(r.report.outcome == Outcome::WithdrawCompleted);
}

TEST_CASE("evaluate and report") {
    Scenario scn;
    scn.expect.outcome = Outcome::WithdrawCompleted;
    scn.expect.max_drag_max = 0.01;
    scn.expect.final_tilt = deg2rad(-4.0);
    scn.expect.converged_delta_max = deg2rad(0.25);
    RunReport r;
    r.scenario = "x";
    r.outcome = Outcome::WithdrawCompleted;
    r.max_drag = 0.004;
    r.final_fork_tilt = deg2rad(-3.7);
    r.converged_delta_tilt = deg2rad(0.1);
    CHECK(all_pass(evaluate(scn, r)));

    r.final_fork_tilt = deg2rad(-3.4);
    auto checks = evaluate(scn, r);
    CHECK(!all_pass(checks));

    r.converged_delta_tilt.reset();
    checks = evaluate(scn, r);
    const auto doc = nlohmann::json::parse(report_json(r, checks));
    CHECK(doc["outcome"] == "withdraw_completed");
    CHECK(doc["converged_delta_tilt_deg"].is_null());
    CHECK(doc["pass"] == false);
    CHECK(doc["checks"].size() == 4);
}
