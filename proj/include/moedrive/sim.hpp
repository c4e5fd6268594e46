#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "moedrive/obs.hpp"
#include "moedrive/tensor.hpp"

namespace moedrive {

enum class ScenarioKind : int {
    Merging = 0,
    Overtaking = 1,
    EmergencyBrake = 2,
    GiveWay = 3,
    TrafficSign = 4,
};
constexpr int kNumScenarios = 5;
const char* scenario_name(ScenarioKind k);

struct Vec2 {
    double x = 0, y = 0;
};

struct ControlCommand {
    double throttle = 0; // [0, 1]
    double brake = 0;    // [0, 1]
    double steer = 0;    // [-1, 1]
};

// physics and geometry constants (20 Hz physics, 2 Hz records)
namespace simconf {
constexpr double kDt = 0.05;
constexpr int kRecordEvery = 10; // physics steps per record -> 2 Hz
constexpr double kAccelMax = 3.0;
constexpr double kBrakeMax = 6.0;
constexpr double kDrag = 0.1;
constexpr double kSpeedMax = 12.0;
constexpr double kWheelbase = 2.8;
constexpr double kMaxSteerAngle = 0.5; // rad at steer = 1
constexpr double kCarHalfLen = 2.3;
constexpr double kCarHalfWidth = 0.95;
constexpr double kLaneWidth = 3.5;
constexpr double kLaneHalf = 1.75;
constexpr double kCollisionDx = 4.4;
constexpr double kCollisionDy = 1.8;
constexpr double kStopSpeed = 0.15;     // "stopped" threshold
constexpr double kStopHoldSec = 1.0;    // full-stop dwell before a stop line clears
constexpr double kTMaxDefault = 30.0;
constexpr double kGamma = 0.99; // discount for oracle value targets
constexpr double kNone = 1e9;   // absent scenario element (stop line, lane end)
} // namespace simconf

struct Lane {
    double center_y = 0;
    double x_begin = 0;
    double x_end = simconf::kNone;
};

enum class AgentScript : int { ConstantSpeed = 0, LeadBrake = 1 };

struct Agent {
    double x = 0, y = 0, v = 0;
    AgentScript script = AgentScript::ConstantSpeed;
    // LeadBrake behavior: cruise until the ego passes trigger_x, brake to a
    // stop, dwell, then resume cruise speed.
    double brake_decel = 7.0;
    double hold_time = 2.5;
    double cruise = 6.0;
    int phase = 0;
    double phase_t = 0;
};

struct WorldState {
    ScenarioKind kind = ScenarioKind::Merging;
    double t = 0;
    double t_max = simconf::kTMaxDefault;

    // ego pose and speed
    double x = 0, y = 0, heading = 0, v = 0;
    double start_x = 0;
    double max_x = 0;

    std::vector<Lane> lanes; // lanes[0] = ego start lane
    std::vector<Agent> agents;

    double goal_x = 0, goal_y = 0;

    // scenario elements (kNone when absent)
    double lane_end_x = simconf::kNone;  // ego-lane terminus (Merging / GiveWay)
    double stop_line_x = simconf::kNone; // TrafficSign
    double trigger_x = simconf::kNone;   // EmergencyBrake lead brake trigger
    int gap_front_agent = -1;            // Merging gap bounds (agent indices)
    int gap_rear_agent = -1;
    double gap_len = 0;

    // episode flags
    bool collided = false;
    bool violation_lane_end = false;
    bool violation_stop_sign = false;
    bool violation_cutoff = false;
    bool stop_cleared = false;
    double stop_hold_t = 0;
    bool goal_reached = false;
    bool done = false;

    int violation_count() const {
        return int(violation_lane_end) + int(violation_stop_sign) + int(violation_cutoff);
    }
    double completion() const {
        double denom = goal_x - start_x;
        double c = denom > 0 ? (max_x - start_x) / denom : 0.0;
        return c < 0 ? 0.0 : (c > 1 ? 1.0 : c);
    }
    bool timed_out() const { return done && !collided && !goal_reached; }
    bool success() const {
        return goal_reached && !collided && violation_count() == 0 && t <= t_max;
    }
    bool on_drivable(double px, double py) const;
};

/// Deterministic scenario constructor; all randomized geometry comes from
/// (kind, seed).
WorldState spawn_scenario(ScenarioKind kind, uint64_t seed);

/// One 20 Hz physics step. Throws on non-finite control.
void step(WorldState& w, const ControlCommand& c, double dt = simconf::kDt);

/// Forward-facing egocentric raster + measurements for the current state.
Observation observe(const WorldState& w);

/// Privileged state vector (16 entries, roughly unit scale) used for the
/// teacher feature projection and the separability probe. Sees everything,
/// including rear agents.
constexpr int kPrivStateDim = 16;
Tensor1 privileged_state(const WorldState& w);

} // namespace moedrive
