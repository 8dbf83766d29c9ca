#pragma once

#include "palletrack/cloud.hpp"
#include "palletrack/geom.hpp"

#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace palletrack {

inline constexpr double kGravity = 9.81;

/// First-order lag followed by a rate limit.
struct ActuatorModel {
    double time_constant = 0.3;  // s
    double rate_limit = 1.0;     // units/s
    bool one_way = false;        // cannot push down on a grounded load

    void validate() const;
    double respond(double current, double target, double dt) const;
};

struct PlantActuators {
    ActuatorModel tilt{0.3, deg2rad(6.0), false};
    ActuatorModel height{0.3, 0.15, true};
    ActuatorModel drive{0.2, 0.5, false};  // chassis speed
};

/// Pallet plus load in its own sagittal frame: origin at the rear bottom edge,
/// x along the deck, z up through the deck.
struct PalletModel {
    double deck_length = 1.1;
    double deck_width = 1.1;
    double deck_thickness = 0.15;
    double hole_ceiling = 0.10;     // height of the fork-hole ceiling above the bottom
    double hole_clearance = 0.012;  // vertical play of the blade in the hole
    double mass = 500.0;            // kg including load
    double friction_mu = 0.4;       // pallet on fork
    double com_offset_x = 0.0;      // from deck centre
    double com_height = 0.45;
    double load_length = 1.0;
    double load_width = 1.0;
    double load_height = 0.8;

    void validate() const;
    double com_a() const { return 0.5 * deck_length + com_offset_x; }
};

struct ForkGeometry {
    double blade_length = 1.15;
    double heel_zone_fraction = 0.15;  // limit switch covers the rear part of the blade
    double pallet_heel_gap = 0.02;     // pallet rear edge ahead of the heel at pick-up
};

/// Heel-zone force above which the limit switch reads "loaded".
inline constexpr double kSwitchThreshold = 1.0;  // N

enum class Incline { Up, Down };

/// Landing surface: a plane through (pivot_x, pivot_z) whose incline magnitude
/// follows the load it carries. Up rises away from the forklift.
struct SurfaceModel {
    Incline incline = Incline::Up;
    double base_tilt = 0.0;                               // rad at zero load
    std::vector<std::pair<double, double>> tilt_vs_load;  // (kg, rad), magnitudes
    double friction_mu = 0.3;
    double pivot_x = 1.5;
    double pivot_z = 1.0;
    double preload = 0.0;      // kg already on the surface
    double settle_time = 0.3;  // s, suspension lag

    void validate() const;
    /// Signed pitch (right-handed about +y) for an incline magnitude.
    double pitch_for(double magnitude) const;
    double height_at(double x, double pitch) const;
};

/// Incline magnitude for the given load, piecewise-linear and clamped at the ends.
double update_surface_tilt(const SurfaceModel& surface, double load_on_surface);

struct PalletPose {
    double x = 0.0;  // world x of the rear bottom edge
    double z = 0.0;
    double pitch = 0.0;
};

struct Contact {
    enum class Kind { SurfaceRear, SurfaceFront, Ceiling, Floor };
    Kind kind;
    double x = 0.0;        // world x of the contact point
    double blade_s = 0.0;  // distance from the heel, fork contacts only
    double force = 0.0;    // N, >= 0
};

struct ContactReport {
    std::vector<Contact> contacts;
    double surface_load = 0.0;  // N carried by the surface
    double fork_load = 0.0;     // N exchanged with the fork
    double heel_load = 0.0;     // N on the blade top inside the heel zone
    bool blade_in_hole = false;
};

struct WorldState {
    ForkState fork;
    double height_velocity = 0.0;
    double chassis_x = 0.0;
    double chassis_velocity = 0.0;
    PalletPose pallet;
    double surface_tilt = 0.0;  // signed pitch
    double time = 0.0;
    ContactReport contacts;
    std::optional<double> resolved_heel_x;  // heel world x at the last resolve
    bool fork_resting = false;              // height held up by the load
    bool jam = false;
    bool withdrawing = false;

    double heel_x() const { return chassis_x + fork.reach; }
};

struct WorldModel {
    PalletModel pallet;
    SurfaceModel surface;
    ForkGeometry fork;
    PlantActuators actuators;

    void validate() const;
};

struct ActuatorCommand {
    double tilt_ref = 0.0;
    std::optional<double> height_ref;  // position mode when set
    double height_rate = 0.0;          // m/s otherwise
    double drive = 0.0;                // m/s chassis
};

/// Advances the joints by dt in (0, 0.05] s. Contacts are not touched.
WorldState actuate(const ActuatorCommand& cmd, double dt, const WorldState& state,
                   const PlantActuators& actuators);

/// Quasi-static pallet pose and contact forces for the current joints. The
/// pallet settles to its lowest centre of mass allowed by the surface and the
/// blade-in-hole slot; a one-way height actuator is pushed back up instead of
/// driving the load into the surface.
WorldState resolve_contacts(const WorldState& state, const WorldModel& model);
WorldState resolve_contacts(const WorldState& state, const PalletModel& pallet,
                            const SurfaceModel& surface);

/// Moves the surface incline towards the load-dependent target.
WorldState settle_surface(const WorldState& state, const SurfaceModel& surface, double dt);

/// actuate, settle_surface, resolve_contacts.
WorldState step_world(const ActuatorCommand& cmd, double dt, const WorldState& state,
                      const WorldModel& model);

/// Pallet resting on a level fork at the given heel height, contacts resolved.
WorldState initial_world(const WorldModel& model, double fork_height, double reach);

bool limit_switch(const WorldState& state);

/// Largest horizontal pallet displacement after withdrawal began, 0 if it never did.
double drag_metric(std::span<const WorldState> history);

/// Render primitives in the chassis (origin) frame.
std::vector<OrientedBox> scene_boxes(const WorldState& state, const WorldModel& model);

}  // namespace palletrack
