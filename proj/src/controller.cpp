#include "moedrive/controller.hpp"

#include <cmath>
#include <stdexcept>

namespace moedrive {

namespace {
inline double clamp(double v, double lo, double hi) { return v < lo ? lo : (v > hi ? hi : v); }
} // namespace

double pid_step(PidState& s, double error, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("pid_step: dt must be positive");
    s.integral = clamp(s.integral + error * dt, -s.integral_clamp, s.integral_clamp);
    double deriv = s.first ? 0.0 : (error - s.prev_error) / dt;
    s.prev_error = error;
    s.first = false;
    return s.kp * error + s.ki * s.integral + s.kd * deriv;
}

std::pair<double, double> longitudinal(const std::array<Vec2, kWaypointCount>& waypoints,
                                       double current_speed, PidState& pid, double dt) {
    double spacing_sum = 0.0;
    Vec2 prev{0.0, 0.0};
    for (const Vec2& w : waypoints) {
        spacing_sum += std::hypot(w.x - prev.x, w.y - prev.y);
        prev = w;
    }
    double desired = (spacing_sum / kWaypointCount) * 2.0; // 2 Hz waypoints
    double u = pid_step(pid, desired - current_speed, dt);
    if (u > 0.0) return {clamp(u, 0.0, 1.0), 0.0};
    if (u < -kBrakeDeadband) return {0.0, clamp(-u, 0.0, 1.0)};
    return {0.0, 0.0};
}

double lateral(const std::array<Vec2, kWaypointCount>& waypoints, PidState& pid, double dt) {
    double ax = 0.5 * (waypoints[0].x + waypoints[1].x);
    double ay = 0.5 * (waypoints[0].y + waypoints[1].y);
    if (std::abs(ax) < 1e-9 && std::abs(ay) < 1e-9) return 0.0; // degenerate aim point
    double err = std::atan2(ay, ax);
    return clamp(pid_step(pid, err, dt), -1.0, 1.0);
}

} // namespace moedrive
