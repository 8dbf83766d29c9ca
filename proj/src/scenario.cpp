#include "palletrack/scenario.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace palletrack {

const char* to_string(Outcome o) {
    switch (o) {
        case Outcome::WithdrawCompleted: return "withdraw_completed";
        case Outcome::HaltedTimeout: return "halted_timeout";
        case Outcome::JamFault: return "jam_fault";
    }
    return "?";
}

Outcome outcome_from_string(const std::string& s) {
    if (s == "withdraw_completed") return Outcome::WithdrawCompleted;
    if (s == "halted_timeout") return Outcome::HaltedTimeout;
    if (s == "jam_fault") return Outcome::JamFault;
    throw ScenarioParseError("unknown outcome '" + s + "'");
}

void Scenario::validate() const {
    world.validate();
    camera.validate();
    tracker.validate();
    icp.validate();
    if (!(duration_limit > 0.0)) throw std::invalid_argument("Scenario: duration_limit <= 0");
    if (!(plant_dt > 0.0 && plant_dt <= 0.05)) {
        throw std::invalid_argument("Scenario: plant_dt must be in (0, 0.05]");
    }
    if (!(withdraw.back_speed > 0.0)) throw std::invalid_argument("Scenario: back_speed <= 0");
    if (!(withdraw.target_distance > withdraw.fork_length)) {
        throw std::invalid_argument("Scenario: withdraw target must exceed the fork length");
    }
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

class KeyValues {
public:
    KeyValues(const std::string& text, std::string origin) : origin_(std::move(origin)) {
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) fail(lineno, "expected 'key = value'");
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty()) fail(lineno, "empty key");
            if (!values_.emplace(key, value).second) fail(lineno, "duplicate key '" + key + "'");
            lines_[key] = lineno;
        }
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::optional<std::string> str(const std::string& key) {
        const auto it = values_.find(key);
        if (it == values_.end()) return std::nullopt;
        used_.insert(key);
        return it->second;
    }

    std::optional<double> num(const std::string& key) {
        const auto s = str(key);
        if (!s) return std::nullopt;
        return to_number(key, *s);
    }

    void num(const std::string& key, double& out, double scale = 1.0) {
        if (const auto v = num(key)) out = *v * scale;
    }

    void integer(const std::string& key, auto& out) {
        if (const auto v = num(key)) {
            if (*v != static_cast<double>(static_cast<long long>(*v)) || *v < 0) {
                fail(lines_[key], "'" + key + "' must be a non-negative integer");
            }
            out = static_cast<std::remove_reference_t<decltype(out)>>(*v);
        }
    }

    void flag(const std::string& key, bool& out) {
        if (const auto s = str(key)) {
            if (*s == "true" || *s == "1") out = true;
            else if (*s == "false" || *s == "0") out = false;
            else fail(lines_[key], "'" + key + "' must be true or false");
        }
    }

    // "a:b, c:d" pairs.
    std::optional<std::vector<std::pair<double, double>>> pairs(const std::string& key) {
        const auto s = str(key);
        if (!s) return std::nullopt;
        std::vector<std::pair<double, double>> out;
        std::istringstream in(*s);
        std::string item;
        while (std::getline(in, item, ',')) {
            item = trim(item);
            const auto colon = item.find(':');
            if (colon == std::string::npos) fail(lines_[key], "'" + key + "' expects a:b pairs");
            out.emplace_back(to_number(key, trim(item.substr(0, colon))),
                             to_number(key, trim(item.substr(colon + 1))));
        }
        return out;
    }

    // "x, y, z".
    std::optional<Vec3> vec3(const std::string& key) {
        const auto s = str(key);
        if (!s) return std::nullopt;
        std::istringstream in(*s);
        std::string item;
        std::vector<double> v;
        while (std::getline(in, item, ',')) v.push_back(to_number(key, trim(item)));
        if (v.size() != 3) fail(lines_[key], "'" + key + "' expects three comma-separated numbers");
        return Vec3(v[0], v[1], v[2]);
    }

    void reject_unused() const {
        for (const auto& [key, value] : values_) {
            if (!used_.count(key)) fail(lines_.at(key), "unknown key '" + key + "'");
        }
    }

    [[noreturn]] void fail(int line, const std::string& msg) const {
        throw ScenarioParseError(origin_ + ":" + std::to_string(line) + ": " + msg);
    }

private:
    double to_number(const std::string& key, const std::string& s) {
        double v = 0.0;
        const auto* end = s.data() + s.size();
        const auto [ptr, ec] = std::from_chars(s.data(), end, v);
        if (ec != std::errc() || ptr != end) {
            fail(lines_[key], "'" + key + "' has non-numeric value '" + s + "'");
        }
        return v;
    }

    std::string origin_;
    std::map<std::string, std::string> values_;
    std::map<std::string, int> lines_;
    std::set<std::string> used_;
};

constexpr double kDeg = std::numbers::pi / 180.0;

// Optical frame (x right, y down, z view) expressed in chassis axes, pitched down.
RigidTransform camera_mount(double x, double z, double pitch_down) {
    Mat3 optical;
    optical.col(0) = -axis::lateral;
    optical.col(1) = -axis::up;
    optical.col(2) = axis::forward;
    return RigidTransform::translation(x, 0.0, z) * RigidTransform::rot_y(pitch_down) *
           RigidTransform(optical, Vec3::Zero());
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& origin) {
    KeyValues kv(text, origin);
    Scenario sc;

    if (auto v = kv.str("name")) sc.name = *v;
    if (auto v = kv.str("control_mode")) {
        if (*v == "proposed") sc.control_mode = ControlMode::Proposed;
        else if (*v == "no_control") sc.control_mode = ControlMode::NoControl;
        else throw ScenarioParseError(origin + ": control_mode must be proposed or no_control");
    }
    kv.integer("seed", sc.seed);
    kv.num("duration_limit_s", sc.duration_limit);
    kv.num("plant_dt_s", sc.plant_dt);

    SurfaceModel& surf = sc.world.surface;
    if (auto v = kv.str("surface.incline")) {
        if (*v == "up") surf.incline = Incline::Up;
        else if (*v == "down") surf.incline = Incline::Down;
        else throw ScenarioParseError(origin + ": surface.incline must be up or down");
    }
    kv.num("surface.base_tilt_deg", surf.base_tilt, kDeg);
    if (auto v = kv.pairs("surface.tilt_vs_load")) {
        surf.tilt_vs_load.clear();
        for (auto [kg, deg] : *v) surf.tilt_vs_load.emplace_back(kg, deg * kDeg);
    }
    kv.num("surface.friction_mu", surf.friction_mu);
    kv.num("surface.pivot_x_m", surf.pivot_x);
    kv.num("surface.pivot_z_m", surf.pivot_z);
    kv.num("surface.preload_kg", surf.preload);
    kv.num("surface.settle_time_s", surf.settle_time);

    PalletModel& pal = sc.world.pallet;
    double pallet_mass = 25.0;
    kv.num("pallet.deck_length_m", pal.deck_length);
    kv.num("pallet.deck_width_m", pal.deck_width);
    kv.num("pallet.deck_thickness_m", pal.deck_thickness);
    kv.num("pallet.hole_ceiling_m", pal.hole_ceiling);
    kv.num("pallet.hole_clearance_m", pal.hole_clearance);
    kv.num("pallet.mass_kg", pallet_mass);
    kv.num("pallet.friction_mu", pal.friction_mu);

    double load_offset = 0.0;
    sc.load_mass = 475.0;
    kv.num("load.mass_kg", sc.load_mass);
    kv.num("load.length_m", pal.load_length);
    kv.num("load.width_m", pal.load_width);
    kv.num("load.height_m", pal.load_height);
    kv.num("load.offset_x_m", load_offset);
    // Combined centre of mass of deck and load.
    pal.mass = pallet_mass + sc.load_mass;
    pal.com_offset_x = sc.load_mass * load_offset / pal.mass;
    pal.com_height = (pallet_mass * 0.5 * pal.deck_thickness +
                      sc.load_mass * (pal.deck_thickness + 0.5 * pal.load_height)) /
                     pal.mass;

    ForkGeometry& fork = sc.world.fork;
    kv.num("fork.blade_length_m", fork.blade_length);
    kv.num("fork.heel_zone_fraction", fork.heel_zone_fraction);
    kv.num("fork.pallet_heel_gap_m", fork.pallet_heel_gap);
    kv.num("fork.reach_m", sc.reach);
    kv.num("fork.start_gap_m", sc.start_gap);
    sc.withdraw.fork_length = fork.blade_length;

    PlantActuators& act = sc.world.actuators;
    kv.num("actuator.tilt.time_constant_s", act.tilt.time_constant);
    kv.num("actuator.tilt.rate_limit_deg_s", act.tilt.rate_limit, kDeg);
    kv.num("actuator.height.time_constant_s", act.height.time_constant);
    kv.num("actuator.height.rate_limit_m_s", act.height.rate_limit);
    kv.flag("actuator.height.one_way", act.height.one_way);
    kv.num("actuator.drive.time_constant_s", act.drive.time_constant);
    kv.num("actuator.drive.rate_limit_m_s", act.drive.rate_limit);

    CameraModel& cam = sc.camera;
    kv.integer("camera.width", cam.width);
    kv.integer("camera.height", cam.height);
    kv.num("camera.fov_h_deg", cam.fov_h, kDeg);
    kv.num("camera.fov_v_deg", cam.fov_v, kDeg);
    kv.num("camera.noise_sigma_m", cam.depth_noise_sigma);
    double mount_x = -0.15;
    double mount_z = 2.3;
    double mount_pitch = 60.0;
    kv.num("camera.mount_x_m", mount_x);
    kv.num("camera.mount_z_m", mount_z);
    kv.num("camera.pitch_down_deg", mount_pitch);
    sc.camera_on_mast = camera_mount(mount_x, mount_z, mount_pitch * kDeg);

    if (auto v = kv.pairs("mast.polyline")) sc.mast_polyline = MastPolyline(*v);

    // Gaze point defaults to the top centre of the load, in the fork heel frame.
    double gaze_x = fork.pallet_heel_gap + pal.com_a();
    double gaze_z = pal.deck_thickness - pal.hole_ceiling + pal.load_height;
    kv.num("gaze.x_m", gaze_x);
    kv.num("gaze.z_m", gaze_z);
    sc.gaze_on_fork = RigidTransform::translation(gaze_x, 0.0, gaze_z);

    Vec3 bb_min(-0.5 * pal.load_length - 0.05, -0.5 * pal.load_width - 0.05, -0.3);
    Vec3 bb_max(0.5 * pal.load_length + 0.05, 0.5 * pal.load_width + 0.05, 0.1);
    if (auto v = kv.vec3("bb.min_m")) bb_min = *v;
    if (auto v = kv.vec3("bb.max_m")) bb_max = *v;
    try {
        sc.bb = BoundingBox(bb_min, bb_max);
    } catch (const std::invalid_argument& e) {
        throw ScenarioParseError(origin + ": " + e.what());
    }

    TrackerParams& tp = sc.tracker;
    kv.num("tracker.tilt_threshold_deg", tp.tilt_threshold, kDeg);
    kv.num("tracker.cycle_period_s", tp.cycle_period);
    kv.num("tracker.halt_timeout_s", tp.halt_timeout);
    kv.num("tracker.descend_step_m", tp.descend_step);
    kv.num("tracker.release_margin_m", tp.release_margin);
    kv.integer("tracker.release_timeout_cycles", tp.release_timeout_cycles);
    kv.integer("tracker.target_points", tp.target_points);
    kv.num("tracker.bb_dilation_m", tp.bb_dilation);
    tp.mode = sc.control_mode;

    kv.integer("icp.max_iterations", sc.icp.max_iterations);
    kv.num("icp.convergence_eps_m", sc.icp.convergence_eps);
    kv.num("icp.max_correspondence_dist_m", sc.icp.max_correspondence_dist);
    kv.integer("icp.min_points", sc.icp.min_points);

    kv.num("withdraw.kp_height", sc.withdraw.kp_height);
    kv.num("withdraw.back_speed_m_s", sc.withdraw.back_speed);
    kv.num("withdraw.target_distance_m", sc.withdraw.target_distance);
    kv.num("withdraw.odometry_noise_m", sc.odometry_noise);

    Expectations& ex = sc.expect;
    if (auto v = kv.str("expect.outcome")) ex.outcome = outcome_from_string(*v);
    if (auto v = kv.num("expect.max_drag_max_m")) ex.max_drag_max = *v;
    if (auto v = kv.num("expect.max_drag_min_m")) ex.max_drag_min = *v;
    if (auto v = kv.num("expect.final_tilt_deg")) ex.final_tilt = *v * kDeg;
    kv.num("expect.final_tilt_tol_deg", ex.final_tilt_tol, kDeg);
    if (auto v = kv.num("expect.converged_delta_max_deg")) ex.converged_delta_max = *v * kDeg;

    kv.reject_unused();
    try {
        sc.validate();
    } catch (const std::invalid_argument& e) {
        throw ScenarioParseError(origin + ": " + e.what());
    }
    return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioParseError("cannot open scenario file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), path.string());
}

}  // namespace palletrack
