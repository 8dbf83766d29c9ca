#pragma once

#include "palletrack/geom.hpp"

namespace palletrack {

struct WithdrawGains {
    double kp_height = 2.0;        // (m/s)/m
    double back_speed = 0.1;       // m/s
    double target_distance = 1.4;  // m of chassis travel
    double fork_length = 1.15;     // m, target_distance must exceed it
};

/// Straight pull-out along the fork's own inclined extension line.
struct WithdrawPlan {
    double start_height = 0.0;
    double start_tilt = 0.0;
    double kp_height = 2.0;
    double back_speed = 0.1;
    double target_distance = 1.4;

    /// Heel height on the extension line after backing up `s` metres.
    /// A positive (tip-down) tilt makes the line rise towards the chassis.
    double target_height(double s) const;
};

struct WithdrawCommand {
    double height_rate = 0.0;  // m/s, positive raises the fork
    double drive = 0.0;        // m/s, negative reverses the chassis
    bool done = false;
    bool fault = false;
};

/// Freezes the trajectory from the fork sensors at hand-off.
/// Throws std::invalid_argument on non-positive speed or a target distance
/// that would not clear the fork.
WithdrawPlan plan_withdraw(const ForkState& fork, const WithdrawGains& gains = {});

/// Proportional height servo indexed by odometry. `previous_s` is the odometry
/// of the prior call; a decrease is reported as a fault with zero commands.
WithdrawCommand withdraw_step(const WithdrawPlan& plan, double odometry_s, double measured_height,
                              double previous_s = 0.0);

}  // namespace palletrack
