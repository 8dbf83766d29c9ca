// palletrack: run unloading scenarios from the command line.
#include "palletrack/harness.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>

#ifndef PALLETRACK_SCENARIO_DIR
#define PALLETRACK_SCENARIO_DIR "scenarios"
#endif

namespace pt = palletrack;

namespace {

int cmd_run(const std::string& file, const std::string& csv_path, std::optional<std::uint64_t> seed,
            const std::string& report_path) {
    pt::Scenario scn = pt::load_scenario(file);
    if (seed) scn.seed = *seed;
    const pt::RunResult res = pt::run_scenario(scn);
    const auto checks = pt::evaluate(scn, res.report);

    if (!csv_path.empty()) {
        std::ofstream out(csv_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write '" + csv_path + "'");
        out << res.csv;
    }
    if (report_path == "-") {
        std::cout << pt::report_json(res.report, checks) << '\n';
    } else if (!report_path.empty()) {
        std::ofstream out(report_path);
        if (!out) throw std::runtime_error("cannot write '" + report_path + "'");
        out << pt::report_json(res.report, checks) << '\n';
    } else {
        std::printf("%s: %s, final tilt %.2f deg, max drag %.1f mm\n", scn.name.c_str(),
                    pt::to_string(res.report.outcome), pt::rad2deg(res.report.final_fork_tilt),
                    1000.0 * res.report.max_drag);
        for (const auto& c : checks) {
            std::printf("  %-16s %s  %s\n", c.name.c_str(), c.pass ? "ok  " : "FAIL", c.detail.c_str());
        }
    }
    return pt::all_pass(checks) ? 0 : 1;
}

int cmd_suite(const std::string& dir, const std::string& csv_dir) {
    std::printf("%-8s %-20s %-20s %10s %12s %8s  %s\n", "case", "expected", "outcome",
                "tilt_deg", "drag_mm", "wall_s", "result");
    bool ok = true;
    for (const auto& path : pt::suite_files(dir)) {
        const pt::Scenario scn = pt::load_scenario(path);
        const auto t0 = std::chrono::steady_clock::now();
        const pt::RunResult res = pt::run_scenario(scn);
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const auto checks = pt::evaluate(scn, res.report);
        const bool pass = pt::all_pass(checks);
        ok = ok && pass;
        if (!csv_dir.empty()) {
            std::ofstream(std::filesystem::path(csv_dir) / (scn.name + ".csv"), std::ios::binary)
                << res.csv;
        }
        std::printf("%-8s %-20s %-20s %10.2f %12.1f %8.2f  %s\n", scn.name.c_str(),
                    scn.expect.outcome ? pt::to_string(*scn.expect.outcome) : "-",
                    pt::to_string(res.report.outcome), pt::rad2deg(res.report.final_fork_tilt),
                    1000.0 * res.report.max_drag, wall, pass ? "PASS" : "FAIL");
    }
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pallet tracking and fork control simulator"};
    app.require_subcommand(1);

    std::string file, csv_path, report_path;
    std::optional<std::uint64_t> seed;
    auto* run = app.add_subcommand("run", "Run one scenario file");
    run->add_option("scenario", file, "Scenario file")->required()->check(CLI::ExistingFile);
    run->add_option("--csv", csv_path, "Write the per-cycle log here");
    run->add_option("--seed", seed, "Override the scenario seed");
    run->add_option("--report", report_path, "Write the JSON report here ('-' for stdout)");

    std::string dir = PALLETRACK_SCENARIO_DIR, csv_dir;
    auto* suite = app.add_subcommand("suite", "Run the bundled cases and print a table");
    suite->add_option("--dir", dir, "Directory holding case1..case4.scn");
    suite->add_option("--csv-dir", csv_dir, "Write one CSV per case into this directory")
        ->check(CLI::ExistingDirectory);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(file, csv_path, seed, report_path);
        return cmd_suite(dir, csv_dir);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "palletrack: %s\n", e.what());
        return 2;
    }
}
