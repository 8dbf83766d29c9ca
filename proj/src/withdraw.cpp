#include "palletrack/withdraw.hpp"

#include <cmath>
#include <stdexcept>

namespace palletrack {

double WithdrawPlan::target_height(double s) const {
    return start_height + s * std::tan(start_tilt);
}

WithdrawPlan plan_withdraw(const ForkState& fork, const WithdrawGains& gains) {
    if (!(gains.back_speed > 0.0)) throw std::invalid_argument("withdraw: back_speed must be > 0");
    if (!(gains.target_distance > gains.fork_length)) {
        throw std::invalid_argument("withdraw: target_distance must exceed the fork length");
    }
    return {fork.height, fork.tilt, gains.kp_height, gains.back_speed, gains.target_distance};
}

WithdrawCommand withdraw_step(const WithdrawPlan& plan, double odometry_s, double measured_height,
                              double previous_s) {
    WithdrawCommand cmd;
    if (odometry_s < previous_s) {
        cmd.fault = true;
        return cmd;
    }
    if (odometry_s >= plan.target_distance) {
        cmd.done = true;
        return cmd;
    }
    cmd.height_rate = plan.kp_height * (plan.target_height(odometry_s) - measured_height);
    cmd.drive = -plan.back_speed;
    return cmd;
}

}  // namespace palletrack
