#include "moedrive/sim.hpp"

#include <cmath>
#include <stdexcept>

#include "moedrive/rng.hpp"

namespace moedrive {

using namespace simconf;

const char* scenario_name(ScenarioKind k) {
    switch (k) {
    case ScenarioKind::Merging: return "merging";
    case ScenarioKind::Overtaking: return "overtaking";
    case ScenarioKind::EmergencyBrake: return "emergency_brake";
    case ScenarioKind::GiveWay: return "give_way";
    case ScenarioKind::TrafficSign: return "traffic_sign";
    }
    return "?";
}

bool WorldState::on_drivable(double px, double py) const {
    for (const Lane& l : lanes)
        if (px >= l.x_begin && px <= l.x_end && std::abs(py - l.center_y) <= kLaneHalf)
            return true;
    return false;
}

WorldState spawn_scenario(ScenarioKind kind, uint64_t seed) {
    Rng rng(mix_seed(seed, 0x5eed0000ULL + uint64_t(kind)));
    WorldState w;
    w.kind = kind;
    w.x = 5.0;
    w.y = 0.0;
    w.heading = 0.0;
    w.start_x = w.x;
    w.max_x = w.x;
    w.goal_y = 0.0;

    switch (kind) {
    case ScenarioKind::Merging: {
        // ego on a terminating lane, must slot into the one gap of a
        // moving platoon in the left lane before the lane runs out
        w.v = rng.uniform(3.0, 5.0);
        w.lane_end_x = rng.uniform(45.0, 60.0);
        w.lanes.push_back({0.0, -20.0, w.lane_end_x});
        w.lanes.push_back({kLaneWidth, -60.0, kNone});
        double vp = rng.uniform(6.0, 7.5);
        w.gap_len = rng.uniform(18.0, 26.0);
        int gap_after = 1 + int(rng.below(2)); // gap between cars (idx-1, idx)
        double front = rng.uniform(-2.0, 14.0);
        double pos = front;
        for (int i = 0; i < 4; ++i) {
            Agent a;
            a.x = pos;
            a.y = kLaneWidth;
            a.v = vp;
            w.agents.push_back(a);
            double spacing = (i + 1 == gap_after) ? w.gap_len : rng.uniform(9.0, 13.0);
            pos -= spacing;
        }
        w.gap_front_agent = gap_after - 1;
        w.gap_rear_agent = gap_after;
        w.goal_x = w.lane_end_x + 25.0;
        w.goal_y = kLaneWidth;
        break;
    }
    case ScenarioKind::Overtaking: {
        // static vehicle in the ego lane, free left lane
        w.v = rng.uniform(4.0, 6.0);
        double obs_x = rng.uniform(30.0, 45.0);
        w.lanes.push_back({0.0, -20.0, kNone});
        w.lanes.push_back({kLaneWidth, -20.0, kNone});
        Agent a;
        a.x = obs_x;
        a.y = 0.0;
        a.v = 0.0;
        w.agents.push_back(a);
        w.goal_x = obs_x + 40.0;
        break;
    }
    case ScenarioKind::EmergencyBrake: {
        // single lane; the lead car slams the brakes at a randomized
        // trigger point, dwells, then resumes
        w.v = 6.0;
        w.lanes.push_back({0.0, -20.0, kNone});
        w.trigger_x = rng.uniform(15.0, 30.0);
        Agent a;
        a.script = AgentScript::LeadBrake;
        a.x = w.x + rng.uniform(18.0, 25.0);
        a.y = 0.0;
        a.v = 6.0;
        a.cruise = 6.0;
        w.agents.push_back(a);
        w.goal_x = 85.0;
        break;
    }
    case ScenarioKind::GiveWay: {
        // same terminating-lane geometry as Merging, but the only traffic
        // is a fast car approaching from behind in the target lane; it
        // must pass before the ego merges
        w.v = rng.uniform(3.5, 5.0);
        w.lane_end_x = rng.uniform(40.0, 48.0);
        w.lanes.push_back({0.0, -20.0, w.lane_end_x});
        w.lanes.push_back({kLaneWidth, -60.0, kNone});
        Agent a;
        a.x = w.x - rng.uniform(10.0, 18.0);
        a.y = kLaneWidth;
        a.v = rng.uniform(8.5, 10.0);
        w.agents.push_back(a);
        w.goal_x = w.lane_end_x + 10.0;
        w.goal_y = kLaneWidth;
        break;
    }
    case ScenarioKind::TrafficSign: {
        // stop line: a full stop is required before crossing
        w.v = rng.uniform(4.0, 6.0);
        w.lanes.push_back({0.0, -20.0, kNone});
        w.stop_line_x = rng.uniform(30.0, 42.0);
        w.goal_x = w.stop_line_x + 30.0;
        break;
    }
    }
    return w;
}

namespace {

inline double clamp(double v, double lo, double hi) { return v < lo ? lo : (v > hi ? hi : v); }

void advance_agent(WorldState& w, Agent& a, double dt) {
    switch (a.script) {
    case AgentScript::ConstantSpeed:
        break;
    case AgentScript::LeadBrake:
        switch (a.phase) {
        case 0:
            if (w.x >= w.trigger_x) a.phase = 1;
            break;
        case 1:
            a.v = std::max(0.0, a.v - a.brake_decel * dt);
            if (a.v == 0.0) a.phase = 2;
            break;
        case 2:
            a.phase_t += dt;
            if (a.phase_t >= a.hold_time) a.phase = 3;
            break;
        case 3:
            a.v = std::min(a.cruise, a.v + 2.5 * dt);
            break;
        }
        break;
    }
    a.x += a.v * dt;
}

} // namespace

void step(WorldState& w, const ControlCommand& c, double dt) {
    if (w.done) return;
    if (!std::isfinite(c.throttle) || !std::isfinite(c.brake) || !std::isfinite(c.steer))
        throw std::invalid_argument("step: non-finite control");
    double throttle = clamp(c.throttle, 0.0, 1.0);
    double brake = clamp(c.brake, 0.0, 1.0);
    double steer = clamp(c.steer, -1.0, 1.0);

    bool was_in_start_lane = std::abs(w.y) <= kLaneHalf;

    double accel = kAccelMax * throttle - kBrakeMax * brake - kDrag * w.v;
    double v_new = clamp(w.v + accel * dt, 0.0, kSpeedMax);
    double steer_angle = steer * kMaxSteerAngle;
    w.heading += (w.v / kWheelbase) * std::tan(steer_angle) * dt;
    w.v = v_new;
    w.x += w.v * std::cos(w.heading) * dt;
    w.y += w.v * std::sin(w.heading) * dt;
    w.max_x = std::max(w.max_x, w.x);

    for (Agent& a : w.agents) advance_agent(w, a, dt);
    w.t += dt;

    // collisions (small tolerance below the exact footprint sum)
    for (const Agent& a : w.agents) {
        if (std::abs(a.x - w.x) < kCollisionDx && std::abs(a.y - w.y) < kCollisionDy) {
            w.collided = true;
            w.done = true;
            return;
        }
    }

    double front = w.x + kCarHalfLen;

    // stop-line bookkeeping
    if (w.stop_line_x < kNone) {
        if (!w.stop_cleared) {
            bool at_line = front <= w.stop_line_x && front >= w.stop_line_x - 6.0;
            if (at_line && w.v < kStopSpeed)
                w.stop_hold_t += dt;
            else
                w.stop_hold_t = 0;
            if (w.stop_hold_t >= kStopHoldSec) w.stop_cleared = true;
            if (front > w.stop_line_x && !w.stop_cleared) w.violation_stop_sign = true;
        }
    }

    // running past the end of a terminating lane
    if (w.lane_end_x < kNone && !w.violation_lane_end) {
        if (std::abs(w.y) <= kLaneHalf && front > w.lane_end_x) w.violation_lane_end = true;
    }

    // cutting into the target lane right in front of a faster agent
    bool in_start_lane = std::abs(w.y) <= kLaneHalf;
    if (w.kind == ScenarioKind::GiveWay && was_in_start_lane && !in_start_lane &&
        !w.violation_cutoff) {
        for (const Agent& a : w.agents) {
            if (a.y > kLaneHalf && a.v > w.v && a.x > w.x - 12.0 && a.x < w.x + 2.0) {
                w.violation_cutoff = true;
                break;
            }
        }
    }

    if (w.x >= w.goal_x && std::abs(w.y - w.goal_y) <= 1.2) {
        w.goal_reached = true;
        w.done = true;
        return;
    }
    if (w.t >= w.t_max) w.done = true;
}

Observation observe(const WorldState& w) {
    Observation obs;
    obs.grid.assign(Observation::kGridSize, 0.0);
    double ch = std::cos(w.heading), sh = std::sin(w.heading);
    for (int row = 0; row < Observation::kRows; ++row) {
        double cy = 12.0 - (row + 0.5) * Observation::kCellY;
        for (int col = 0; col < Observation::kCols; ++col) {
            double cx = (col + 0.5) * Observation::kCellX;
            // cell center, ego frame -> world
            double px = w.x + ch * cx - sh * cy;
            double py = w.y + sh * cx + ch * cy;
            if (w.on_drivable(px, py))
                obs.grid[Observation::index(0, row, col)] = 1.0;
            for (const Agent& a : w.agents) {
                if (a.x < w.x) continue; // forward-facing: rear agents invisible
                if (std::abs(px - a.x) <= kCarHalfLen + 0.4 &&
                    std::abs(py - a.y) <= kCarHalfWidth + 0.3) {
                    obs.grid[Observation::index(1, row, col)] = 1.0;
                    break;
                }
            }
            if (w.stop_line_x < kNone && std::abs(px - w.stop_line_x) <= 0.75 &&
                std::abs(py) <= kLaneHalf)
                obs.grid[Observation::index(2, row, col)] = 1.0;
        }
    }
    obs.speed = w.v;
    bool merged = std::abs(w.y - kLaneWidth) < 1.0;
    bool lane_change_route =
        w.kind == ScenarioKind::Merging || w.kind == ScenarioKind::GiveWay;
    obs.command = int(lane_change_route && !merged ? Command::ChangeLeft : Command::Follow);
    double gx = w.goal_x - w.x, gy = w.goal_y - w.y;
    obs.goal_x = ch * gx + sh * gy;
    obs.goal_y = -sh * gx + ch * gy;
    return obs;
}

Tensor1 privileged_state(const WorldState& w) {
    Tensor1 s(kPrivStateDim, 0.0);
    auto dist_feat = [&](double target) {
        if (target >= kNone) return 2.0;
        return clamp((target - w.x) / 50.0, -2.0, 2.0);
    };
    s[0] = w.v / 10.0;
    s[1] = w.y / 5.0;
    s[2] = w.heading;
    s[3] = clamp((w.goal_x - w.x) / 50.0, -2.0, 2.0);
    s[4] = dist_feat(w.lane_end_x);
    s[5] = dist_feat(w.stop_line_x);

    double ego_lane = std::abs(w.y) <= kLaneHalf ? 0.0 : kLaneWidth;
    double adj_lane = ego_lane == 0.0 ? kLaneWidth : 0.0;
    double lead_gap = 2.0, lead_dv = 0.0;
    double adjf_gap = 2.0, adjf_dv = 0.0;
    double adjr_gap = 2.0, adjr_dv = 0.0;
    int adj_count = 0;
    bool static_ahead = false;
    for (const Agent& a : w.agents) {
        bool same = std::abs(a.y - ego_lane) <= kLaneHalf;
        bool adj = std::abs(a.y - adj_lane) <= kLaneHalf;
        double dx = a.x - w.x;
        if (same && dx > 0 && dx / 50.0 < lead_gap) {
            lead_gap = dx / 50.0;
            lead_dv = (a.v - w.v) / 10.0;
            if (a.v < 0.2 && dx < 60.0) static_ahead = true;
        }
        if (adj) {
            ++adj_count;
            if (dx >= 0 && dx / 50.0 < adjf_gap) {
                adjf_gap = dx / 50.0;
                adjf_dv = (a.v - w.v) / 10.0;
            }
            if (dx < 0 && -dx / 50.0 < adjr_gap) {
                adjr_gap = -dx / 50.0;
                adjr_dv = (a.v - w.v) / 10.0;
            }
        }
    }
    s[6] = lead_gap;
    s[7] = lead_dv;
    s[8] = adjf_gap;
    s[9] = adjf_dv;
    s[10] = adjr_gap;
    s[11] = adjr_dv;
    s[12] = double(w.lanes.size()) - 1.0;
    s[13] = static_ahead ? 1.0 : 0.0;
    s[14] = w.stop_cleared ? 1.0 : 0.0;
    s[15] = adj_count / 4.0;
    return s;
}

} // namespace moedrive
