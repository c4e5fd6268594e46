#pragma once

#include <array>

#include "moedrive/oracle.hpp"
#include "moedrive/sim.hpp"

namespace moedrive {

/// Incremental PID with integral clamping. The derivative term is zero on
/// the first call after reset (previous error initialized to the first
/// error).
struct PidState {
    double kp = 0, ki = 0, kd = 0;
    double integral_clamp = 10.0;
    double integral = 0;
    double prev_error = 0;
    bool first = true;

    void reset() {
        integral = 0;
        prev_error = 0;
        first = true;
    }
};

// gains from the trajectory-tracking setup this controller mirrors
inline PidState make_longitudinal_pid() { return {5.0, 0.5, 1.0, 10.0}; }
inline PidState make_lateral_pid() { return {0.75, 0.75, 0.3, 2.0}; }

constexpr double kBrakeDeadband = 0.1;

double pid_step(PidState& s, double error, double dt);

/// Waypoints -> throttle/brake. Desired speed is the mean spacing of the
/// [origin, w1..w4] polyline times the 2 Hz prediction rate.
std::pair<double, double> longitudinal(const std::array<Vec2, kWaypointCount>& waypoints,
                                       double current_speed, PidState& pid, double dt);

/// Waypoints -> steer in [-1, 1]; aims at the midpoint of w1 and w2.
double lateral(const std::array<Vec2, kWaypointCount>& waypoints, PidState& pid, double dt);

} // namespace moedrive
