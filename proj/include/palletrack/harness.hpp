#pragma once

#include "palletrack/scenario.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace palletrack {

struct RunReport {
    std::string scenario;
    Outcome outcome = Outcome::HaltedTimeout;
    double final_fork_tilt = 0.0;     // rad, signed
    double final_surface_tilt = 0.0;  // rad, signed
    double max_drag = 0.0;            // m
    int cycles = 0;                   // tracker cycles
    std::optional<double> converged_delta_tilt;  // rad, last |Δtilt| before withdrawal
    double withdraw_tracking_error = 0.0;        // m, past the initial transient
    bool switch_ever_off = false;
    double sim_time = 0.0;  // s
};

struct RunResult {
    RunReport report;
    std::string csv;
};

inline constexpr const char* kCsvHeader =
    "time_s,phase,delta_tilt_deg,delta_height_m,fork_tilt_meas_deg,fork_tilt_ref_deg,"
    "fork_height_m,limit_switch,pallet_pitch_deg,pallet_x_m,surface_tilt_deg,icp_error_m,"
    "icp_iters";

/// Withdrawal distance after which height tracking is scored.
inline constexpr double kWithdrawTransient = 0.1;  // m

/// Highest surface point under the pallet plus the start gap, expressed as a heel height.
double start_fork_height(const Scenario& scn);

RunResult run_scenario(const Scenario& scn);

struct Check {
    std::string name;
    bool pass = false;
    std::string detail;
};

std::vector<Check> evaluate(const Scenario& scn, const RunReport& report);
bool all_pass(const std::vector<Check>& checks);

/// Single JSON document with the report and every check.
std::string report_json(const RunReport& report, const std::vector<Check>& checks);

/// The four bundled unloading cases, in run order.
std::vector<std::filesystem::path> suite_files(const std::filesystem::path& dir);

}  // namespace palletrack
