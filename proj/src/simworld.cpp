#include "palletrack/simworld.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace palletrack {

void ActuatorModel::validate() const {
    if (!(time_constant > 0.0)) throw std::invalid_argument("ActuatorModel: time_constant <= 0");
    if (!(rate_limit > 0.0)) throw std::invalid_argument("ActuatorModel: rate_limit <= 0");
}

double ActuatorModel::respond(double current, double target, double dt) const {
    const double lagged = target + (current - target) * std::exp(-dt / time_constant);
    const double max_step = rate_limit * dt;
    return current + std::clamp(lagged - current, -max_step, max_step);
}

void PalletModel::validate() const {
    if (!(hole_clearance > 0.0)) throw std::invalid_argument("PalletModel: hole_clearance <= 0");
    if (!(mass > 0.0)) throw std::invalid_argument("PalletModel: mass <= 0");
    if (!(deck_length > 0.0 && deck_thickness > 0.0)) {
        throw std::invalid_argument("PalletModel: non-positive deck size");
    }
    if (!(hole_ceiling > hole_clearance && hole_ceiling < deck_thickness)) {
        throw std::invalid_argument("PalletModel: hole must lie inside the deck");
    }
}

void SurfaceModel::validate() const {
    double prev_load = -1.0;
    double prev_tilt = base_tilt;
    for (const auto& [load, tilt] : tilt_vs_load) {
        if (!(load > prev_load)) throw std::invalid_argument("SurfaceModel: loads must increase");
        if (tilt < prev_tilt) throw std::invalid_argument("SurfaceModel: tilt_vs_load not monotone");
        prev_load = load;
        prev_tilt = tilt;
    }
    if (settle_time < 0.0) throw std::invalid_argument("SurfaceModel: settle_time < 0");
}

double SurfaceModel::pitch_for(double magnitude) const {
    return incline == Incline::Up ? -magnitude : magnitude;
}

double SurfaceModel::height_at(double x, double pitch) const {
    return pivot_z - (x - pivot_x) * std::tan(pitch);
}

double update_surface_tilt(const SurfaceModel& surface, double load) {
    if (load < 0.0) throw std::invalid_argument("update_surface_tilt: negative load");
    std::vector<std::pair<double, double>> pts;
    if (surface.tilt_vs_load.empty() || surface.tilt_vs_load.front().first > 0.0) {
        pts.emplace_back(0.0, surface.base_tilt);
    }
    pts.insert(pts.end(), surface.tilt_vs_load.begin(), surface.tilt_vs_load.end());
    if (load <= pts.front().first) return pts.front().second;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (load <= pts[i].first) {
            const auto& [l0, t0] = pts[i - 1];
            const auto& [l1, t1] = pts[i];
            if (load == l1) return t1;
            return t0 + (load - l0) / (l1 - l0) * (t1 - t0);
        }
    }
    return pts.back().second;
}

void WorldModel::validate() const {
    pallet.validate();
    surface.validate();
    actuators.tilt.validate();
    actuators.height.validate();
    actuators.drive.validate();
    if (!(fork.blade_length > 0.0)) throw std::invalid_argument("ForkGeometry: blade_length <= 0");
}

WorldState actuate(const ActuatorCommand& cmd, double dt, const WorldState& state,
                   const PlantActuators& act) {
    if (!(dt > 0.0 && dt <= 0.05)) throw std::invalid_argument("actuate: dt must be in (0, 0.05]");
    WorldState next = state;
    next.fork.tilt = act.tilt.respond(state.fork.tilt, cmd.tilt_ref, dt);
    if (cmd.height_ref) {
        next.fork.height = act.height.respond(state.fork.height, *cmd.height_ref, dt);
        next.height_velocity = (next.fork.height - state.fork.height) / dt;
    } else {
        const double lagged = cmd.height_rate + (state.height_velocity - cmd.height_rate) *
                                                    std::exp(-dt / act.height.time_constant);
        next.height_velocity = std::clamp(lagged, -act.height.rate_limit, act.height.rate_limit);
        next.fork.height = state.fork.height + next.height_velocity * dt;
    }
    const double v = cmd.drive + (state.chassis_velocity - cmd.drive) *
                                     std::exp(-dt / act.drive.time_constant);
    next.chassis_velocity = std::clamp(v, -act.drive.rate_limit, act.drive.rate_limit);
    next.chassis_x = state.chassis_x + next.chassis_velocity * dt;
    next.time = state.time + dt;
    return next;
}

namespace {

constexpr double kPitchRange = 0.3;   // rad searched either side of level
constexpr double kActiveTol = 1e-6;   // m, contact activity
constexpr int kGoldenIters = 80;
constexpr int kBisectIters = 60;
constexpr double kInvPhi = 0.6180339887498949;

// Sagittal-plane contact geometry for one fork pose and pallet x.
struct Geometry {
    double heel_x, heel_z, fork_tilt, blade_length;
    double pallet_x, length, ceiling, clearance, com_a, com_b;
    double surf_pivot_x, surf_pivot_z, surf_pitch;

    double surface(double x) const {
        return surf_pivot_z - (x - surf_pivot_x) * std::tan(surf_pitch);
    }
    double blade_x(double s) const { return heel_x + s * std::cos(fork_tilt); }
    double blade_z(double s) const { return heel_z - s * std::sin(fork_tilt); }
};

struct Bounds {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    bool overlap = false;
    std::array<double, 2> s{0.0, 0.0};     // blade stations bounding the overlap
    std::array<double, 2> base{0.0, 0.0};  // pallet z at which the ceiling touches there
};

// Range of pallet z at pitch phi allowed by the surface (below) and by the slot
// (ceiling above the blade, floor below it).
Bounds bounds_at(const Geometry& g, double phi, double z_guess) {
    const double c = std::cos(phi);
    const double sn = std::sin(phi);
    Bounds b;
    double surface_lo = -std::numeric_limits<double>::infinity();
    for (double a : {0.0, g.length}) {
        surface_lo = std::max(surface_lo, g.surface(g.pallet_x + a * c) + a * sn);
    }
    b.lo = surface_lo;

    double z_est = z_guess;
    for (int pass = 0; pass < 2; ++pass) {
        const double a_heel = c * (g.heel_x - g.pallet_x) - sn * (g.heel_z - z_est);
        const double k = std::cos(phi - g.fork_tilt);
        const double s0 = std::max(0.0, -a_heel / k);
        const double s1 = std::min(g.blade_length, (g.length - a_heel) / k);
        b.lo = surface_lo;
        b.hi = std::numeric_limits<double>::infinity();
        b.overlap = s1 > s0;
        if (!b.overlap) break;
        b.s = {s0, s1};
        for (int i = 0; i < 2; ++i) {
            const double px = g.blade_x(b.s[i]);
            const double pz = g.blade_z(b.s[i]);
            b.base[i] = (sn * (px - g.pallet_x) + c * pz - g.ceiling) / c;
            b.lo = std::max(b.lo, b.base[i]);
            b.hi = std::min(b.hi, b.base[i] + g.clearance / c);
        }
        z_est = b.lo;
    }
    return b;
}

double margin(const Geometry& g, double phi, double z_guess) {
    const Bounds b = bounds_at(g, phi, z_guess);
    return std::min(b.hi - b.lo, 1e3);
}

double com_height(const Geometry& g, double phi, double z) {
    return z - g.com_a * std::sin(phi) + g.com_b * std::cos(phi);
}

template <typename F>
double golden_min(F&& f, double lo, double hi) {
    double x1 = hi - kInvPhi * (hi - lo);
    double x2 = lo + kInvPhi * (hi - lo);
    double f1 = f(x1);
    double f2 = f(x2);
    for (int i = 0; i < kGoldenIters; ++i) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - kInvPhi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + kInvPhi * (hi - lo);
            f2 = f(x2);
        }
    }
    return f1 <= f2 ? x1 : x2;
}

struct Solution {
    bool feasible = false;
    double pitch = 0.0;
    double z = 0.0;
};

Solution solve_pose(const Geometry& g, double z_guess) {
    const double lo = -kPitchRange;
    const double hi = kPitchRange;
    // Slot constraints make the margin concave in pitch; find its peak first.
    const double peak = golden_min([&](double phi) { return -margin(g, phi, z_guess); }, lo, hi);
    if (margin(g, peak, z_guess) < -1e-12) return {};

    auto edge = [&](double feasible_end, double far_end) {
        if (margin(g, far_end, z_guess) >= 0.0) return far_end;
        double a = feasible_end;
        double b = far_end;
        for (int i = 0; i < kBisectIters; ++i) {
            const double m = 0.5 * (a + b);
            (margin(g, m, z_guess) >= 0.0 ? a : b) = m;
        }
        return a;
    };
    const double left = edge(peak, lo);
    const double right = edge(peak, hi);

    auto potential = [&](double phi) {
        return com_height(g, phi, bounds_at(g, phi, z_guess).lo);
    };
    double best = left == right ? left : golden_min(potential, left, right);
    for (double cand : {left, right}) {
        if (potential(cand) < potential(best)) best = cand;
    }
    return {true, best, bounds_at(g, best, z_guess).lo};
}

struct ForceSolve {
    std::vector<Contact> contacts;
    bool ok = false;
};

// Vertical force balance and moment balance about x = 0 over the active
// contacts. Prefers solutions without floor contacts, then the largest share
// carried by the surface.
ForceSolve distribute(std::vector<Contact> active, double weight, double com_x) {
    ForceSolve best;
    const std::size_t n = active.size();
    auto sign = [](const Contact& c) { return c.kind == Contact::Kind::Floor ? -1.0 : 1.0; };
    auto is_surface = [](const Contact& c) {
        return c.kind == Contact::Kind::SurfaceRear || c.kind == Contact::Kind::SurfaceFront;
    };
    double best_score = -std::numeric_limits<double>::infinity();
    const double tol = 1e-9 * weight;

    auto consider = [&](const std::vector<std::size_t>& idx, const std::vector<double>& f) {
        for (double v : f) {
            if (v < -tol) return;
        }
        bool uses_floor = false;
        double surf = 0.0;
        for (std::size_t i = 0; i < idx.size(); ++i) {
            if (active[idx[i]].kind == Contact::Kind::Floor && f[i] > tol) uses_floor = true;
            if (is_surface(active[idx[i]])) surf += f[i];
        }
        const double score = (uses_floor ? -1e6 : 0.0) * weight + surf;
        if (score > best_score + tol) {
            best_score = score;
            best.contacts = active;
            for (auto& c : best.contacts) c.force = 0.0;
            for (std::size_t i = 0; i < idx.size(); ++i) {
                best.contacts[idx[i]].force = std::max(0.0, f[i]);
            }
            best.ok = true;
        }
    };

    for (std::size_t i = 0; i < n; ++i) {
        if (sign(active[i]) > 0.0 && std::abs(active[i].x - com_x) <= 1e-7) {
            consider({i}, {weight});
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double si = sign(active[i]);
            const double sj = sign(active[j]);
            const double xi = active[i].x;
            const double xj = active[j].x;
            const double det = si * sj * (xj - xi);
            if (std::abs(det) < 1e-9) continue;
            // si Fi + sj Fj = W ; si Fi xi + sj Fj xj = W xc
            const double fi = weight * sj * (xj - com_x) / det;
            const double fj = weight * si * (com_x - xi) / det;
            consider({i, j}, {fi, fj});
        }
    }
    if (!best.ok) {
        // Three supports: minimum-norm split.
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                for (std::size_t k = j + 1; k < n; ++k) {
                    Eigen::Matrix<double, 2, 3> a;
                    const std::array<std::size_t, 3> id{i, j, k};
                    for (int c = 0; c < 3; ++c) {
                        a(0, c) = sign(active[id[c]]);
                        a(1, c) = sign(active[id[c]]) * active[id[c]].x;
                    }
                    const Eigen::Vector2d rhs(weight, weight * com_x);
                    const Eigen::Matrix2d aat = a * a.transpose();
                    if (std::abs(aat.determinant()) < 1e-12) continue;
                    const Eigen::Vector3d f = a.transpose() * aat.inverse() * rhs;
                    consider({i, j, k}, {f[0], f[1], f[2]});
                }
            }
        }
    }
    return best;
}

Geometry make_geometry(const WorldState& s, const PalletModel& pallet, const ForkGeometry& fork,
                       const SurfaceModel& surface) {
    return {s.heel_x(), s.fork.height, s.fork.tilt, fork.blade_length,
            s.pallet.x, pallet.deck_length, pallet.hole_ceiling, pallet.hole_clearance,
            pallet.com_a(), pallet.com_height,
            surface.pivot_x, surface.pivot_z, s.surface_tilt};
}

ContactReport contact_forces(const Geometry& g, const Solution& sol, const PalletModel& pallet,
                             const ForkGeometry& fork, double z_guess) {
    const double c = std::cos(sol.pitch);
    const double sn = std::sin(sol.pitch);
    std::vector<Contact> active;
    const std::array<double, 2> corners{0.0, g.length};
    for (int i = 0; i < 2; ++i) {
        const double x = g.pallet_x + corners[i] * c;
        const double gap = sol.z - corners[i] * sn - g.surface(x);
        if (gap <= kActiveTol) {
            active.push_back({i == 0 ? Contact::Kind::SurfaceRear : Contact::Kind::SurfaceFront,
                              x, 0.0, 0.0});
        }
    }
    const Bounds b = bounds_at(g, sol.pitch, z_guess);
    ContactReport report;
    report.blade_in_hole = b.overlap;
    if (b.overlap) {
        for (int i = 0; i < 2; ++i) {
            const double gap = c * (sol.z - b.base[i]);  // ceiling above blade top
            const double x = g.blade_x(b.s[i]);
            if (gap <= kActiveTol) active.push_back({Contact::Kind::Ceiling, x, b.s[i], 0.0});
            if (g.clearance - gap <= kActiveTol) {
                active.push_back({Contact::Kind::Floor, x, b.s[i], 0.0});
            }
        }
    }
    const double weight = pallet.mass * kGravity;
    const double com_x = g.pallet_x + g.com_a * c + g.com_b * sn;
    ForceSolve fs = distribute(active, weight, com_x);
    report.contacts = fs.ok ? fs.contacts : active;
    for (const auto& ct : report.contacts) {
        switch (ct.kind) {
            case Contact::Kind::SurfaceRear:
            case Contact::Kind::SurfaceFront:
                report.surface_load += ct.force;
                break;
            case Contact::Kind::Ceiling:
                report.fork_load += ct.force;
                if (ct.blade_s <= fork.heel_zone_fraction * fork.blade_length) {
                    report.heel_load += ct.force;
                }
                break;
            case Contact::Kind::Floor:
                report.fork_load += ct.force;
                break;
        }
    }
    return report;
}

struct Resolved {
    Solution sol;
    double heel_z = 0.0;
    bool raised = false;
    bool jam = false;
};

// Solves the pallet pose; lifts a one-way height actuator just enough to make
// the geometry feasible.
Resolved resolve_pose(Geometry g, double z_guess, bool one_way) {
    Resolved r;
    r.heel_z = g.heel_z;
    r.sol = solve_pose(g, z_guess);
    if (r.sol.feasible) return r;
    if (!one_way) {
        r.jam = true;
        return r;
    }
    constexpr double kMaxRaise = 0.5;
    Geometry probe = g;
    probe.heel_z = g.heel_z + kMaxRaise;
    if (!solve_pose(probe, z_guess + kMaxRaise).feasible) {
        r.jam = true;
        return r;
    }
    double lo = 0.0;
    double hi = kMaxRaise;
    for (int i = 0; i < kBisectIters; ++i) {
        const double mid = 0.5 * (lo + hi);
        probe.heel_z = g.heel_z + mid;
        (solve_pose(probe, z_guess + mid).feasible ? hi : lo) = mid;
        if (hi - lo < 1e-10) break;
    }
    probe.heel_z = g.heel_z + hi;
    r.sol = solve_pose(probe, z_guess + hi);
    r.heel_z = probe.heel_z;
    r.raised = true;
    r.jam = !r.sol.feasible;
    return r;
}

}  // namespace

WorldState resolve_contacts(const WorldState& state, const WorldModel& model) {
    const PalletModel& pallet = model.pallet;
    WorldState next = state;
    const bool one_way = model.actuators.height.one_way;

    auto solve_at = [&](WorldState& s) -> bool {
        Geometry g = make_geometry(s, pallet, model.fork, model.surface);
        const Resolved r = resolve_pose(g, s.pallet.z, one_way);
        if (r.jam) return false;
        s.fork_resting = r.raised;
        if (r.raised) {
            s.fork.height = r.heel_z;
            s.height_velocity = std::max(0.0, s.height_velocity);
            g.heel_z = r.heel_z;
        }
        s.pallet.pitch = r.sol.pitch;
        s.pallet.z = r.sol.z;
        s.contacts = contact_forces(g, r.sol, pallet, model.fork, r.sol.z);
        return true;
    };

    next.jam = !solve_at(next);
    if (next.jam) {
        next.pallet = state.pallet;
        next.fork.limit_switch = limit_switch(next);
        next.resolved_heel_x = next.heel_x();
        return next;
    }

    // The pallet follows a sliding fork when blade friction beats surface friction.
    const double fork_dx = state.resolved_heel_x ? next.heel_x() - *state.resolved_heel_x : 0.0;
    if (fork_dx != 0.0 && next.contacts.blade_in_hole &&
        pallet.friction_mu * next.contacts.fork_load >
            model.surface.friction_mu * next.contacts.surface_load) {
        WorldState dragged = next;
        dragged.pallet.x += fork_dx;
        if (solve_at(dragged)) next = dragged;
    }
    next.fork.limit_switch = limit_switch(next);
    next.resolved_heel_x = next.heel_x();
    return next;
}

WorldState resolve_contacts(const WorldState& state, const PalletModel& pallet,
                            const SurfaceModel& surface) {
    WorldModel model;
    model.pallet = pallet;
    model.surface = surface;
    return resolve_contacts(state, model);
}

WorldState settle_surface(const WorldState& state, const SurfaceModel& surface, double dt) {
    WorldState next = state;
    const double load = surface.preload + state.contacts.surface_load / kGravity;
    const double target = surface.pitch_for(update_surface_tilt(surface, load));
    const double alpha = surface.settle_time > 0.0 ? 1.0 - std::exp(-dt / surface.settle_time) : 1.0;
    next.surface_tilt = state.surface_tilt + alpha * (target - state.surface_tilt);
    return next;
}

WorldState step_world(const ActuatorCommand& cmd, double dt, const WorldState& state,
                      const WorldModel& model) {
    WorldState next = actuate(cmd, dt, state, model.actuators);
    next = settle_surface(next, model.surface, dt);
    return resolve_contacts(next, model);
}

WorldState initial_world(const WorldModel& model, double fork_height, double reach) {
    model.validate();
    WorldState s;
    s.fork.height = fork_height;
    s.fork.reach = reach;
    s.fork.tilt = 0.0;
    s.surface_tilt =
        model.surface.pitch_for(update_surface_tilt(model.surface, model.surface.preload));
    s.pallet.x = reach + model.fork.pallet_heel_gap;
    s.pallet.z = fork_height - model.pallet.hole_ceiling;
    s.pallet.pitch = 0.0;
    return resolve_contacts(s, model);
}

bool limit_switch(const WorldState& state) {
    return state.contacts.heel_load > kSwitchThreshold;
}

double drag_metric(std::span<const WorldState> history) {
    const auto start = std::find_if(history.begin(), history.end(),
                                    [](const WorldState& s) { return s.withdrawing; });
    if (start == history.end()) return 0.0;
    double worst = 0.0;
    for (auto it = start; it != history.end(); ++it) {
        worst = std::max(worst, std::abs(it->pallet.x - start->pallet.x));
    }
    return worst;
}

std::vector<OrientedBox> scene_boxes(const WorldState& state, const WorldModel& model) {
    const PalletModel& p = model.pallet;
    const SurfaceModel& s = model.surface;
    const double shift = -state.chassis_x;
    const RigidTransform pallet_frame =
        RigidTransform::translation(state.pallet.x + shift, 0.0, state.pallet.z) *
        RigidTransform::rot_y(state.pallet.pitch);

    std::vector<OrientedBox> boxes;
    boxes.push_back({pallet_frame * RigidTransform::translation(0.5 * p.deck_length, 0.0,
                                                                0.5 * p.deck_thickness),
                     Vec3(0.5 * p.deck_length, 0.5 * p.deck_width, 0.5 * p.deck_thickness)});
    boxes.push_back(
        {pallet_frame * RigidTransform::translation(p.com_a(), 0.0,
                                                    p.deck_thickness + 0.5 * p.load_height),
         Vec3(0.5 * p.load_length, 0.5 * p.load_width, 0.5 * p.load_height)});
    boxes.push_back({RigidTransform::translation(s.pivot_x + shift, 0.0, s.pivot_z) *
                         RigidTransform::rot_y(state.surface_tilt) *
                         RigidTransform::translation(1.0, 0.0, -0.05),
                     Vec3(1.6, 2.0, 0.05)});
    boxes.push_back({RigidTransform::translation(0.0, 0.0, -0.05), Vec3(30.0, 30.0, 0.05)});
    return boxes;
}

}  // namespace palletrack
