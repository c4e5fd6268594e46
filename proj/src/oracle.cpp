#include "moedrive/oracle.hpp"

#include <cmath>

#include "moedrive/rng.hpp"

namespace moedrive {

using namespace simconf;

TeacherProjection TeacherProjection::from_seed(uint64_t seed) {
    Rng rng(mix_seed(seed, 0x7ea6e12ULL));
    TeacherProjection p;
    p.m = Tensor2(kTeacherFeatDim, kPrivStateDim);
    double scale = 1.0 / std::sqrt(double(kPrivStateDim));
    for (double& v : p.m.d) v = rng.uniform(-1.0, 1.0) * scale;
    return p;
}

Tensor1 TeacherProjection::apply(const Tensor1& priv_state) const {
    Tensor1 zero(m.rows, 0.0);
    Tensor1 out(m.rows, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < m.cols; ++j) acc += m.at(i, j) * priv_state[j];
        out[i] = acc;
    }
    return out;
}

Vec2 to_ego_frame(double ex, double ey, double eheading, double px, double py) {
    double ch = std::cos(eheading), sh = std::sin(eheading);
    double dx = px - ex, dy = py - ey;
    return {ch * dx + sh * dy, -sh * dx + ch * dy};
}

namespace {

inline double clamp(double v, double lo, double hi) { return v < lo ? lo : (v > hi ? hi : v); }

ControlCommand track(const WorldState& w, double v_des, double y_des) {
    ControlCommand c;
    double u = 0.9 * (v_des - w.v);
    if (u > 0) {
        c.throttle = clamp(u, 0.0, 1.0);
    } else if (u < -0.08) {
        c.brake = clamp(-u, 0.0, 1.0);
    }
    double heading_des = std::atan2(clamp(y_des - w.y, -3.5, 3.5), 7.0);
    c.steer = clamp(2.5 * (heading_des - w.heading), -1.0, 1.0);
    return c;
}

// slow to a stop short of a terminating lane while not yet merged
double lane_end_cap(const WorldState& w, double v_des) {
    if (w.lane_end_x >= kNone || std::abs(w.y) > kLaneHalf) return v_des;
    double dist = w.lane_end_x - (w.x + kCarHalfLen);
    if (dist < 18.0) return std::min(v_des, 0.35 * std::max(0.0, dist - 4.0));
    return v_des;
}

ControlCommand merging_controls(const WorldState& w) {
    const Agent& front = w.agents[w.gap_front_agent];
    const Agent& rear = w.agents[w.gap_rear_agent];
    double center = 0.5 * (front.x + rear.x);
    double vp = front.v;
    bool merged = w.y > kLaneHalf;
    double v_des = clamp(vp + 0.4 * (center - w.x), 0.0, 9.5);
    if (merged) {
        // stay centered in the gap
        if (front.x - w.x < 7.0) v_des = std::min(v_des, front.v - 0.5);
        return track(w, v_des, kLaneWidth);
    }
    v_des = lane_end_cap(w, v_des);
    bool in_gap = w.x > rear.x + 5.5 && w.x < front.x - 5.5;
    bool committed = w.y > 0.6;
    double y_des = (in_gap || committed) ? kLaneWidth : 0.0;
    return track(w, v_des, y_des);
}

ControlCommand overtaking_controls(const WorldState& w) {
    const Agent& obs = w.agents[0];
    double rel = w.x - obs.x;
    double y_des = (rel > -16.0 && rel < 10.0) ? kLaneWidth : 0.0;
    return track(w, 6.0, y_des);
}

ControlCommand embrake_controls(const WorldState& w) {
    const Agent& lead = w.agents[0];
    double gap = lead.x - w.x - 2.0 * kCarHalfLen;
    double v_des = std::min(6.5, std::max(0.0, (gap - 4.5) / 1.3));
    if (gap < 3.0 + 0.8 * w.v) v_des = 0.0;
    return track(w, v_des, 0.0);
}

ControlCommand giveway_controls(const WorldState& w) {
    const Agent& rear = w.agents[0];
    bool merged = w.y > kLaneHalf;
    bool passed = rear.x > w.x + 7.0;
    if (merged) return track(w, 6.5, kLaneWidth);
    double v_des = lane_end_cap(w, std::min(4.5, 6.5));
    bool committed = w.y > 0.6;
    if (passed || committed) return track(w, std::max(v_des, 5.0), kLaneWidth);
    return track(w, v_des, 0.0);
}

ControlCommand trafficsign_controls(const WorldState& w) {
    double d = w.stop_line_x - (w.x + kCarHalfLen) - 0.6;
    if (!w.stop_cleared) {
        if (d < 0.35) return ControlCommand{0.0, 0.6, 0.0}; // hold at the line
        double v_des = std::min(6.0, std::sqrt(2.0 * 1.8 * std::max(0.0, d)));
        return track(w, v_des, 0.0);
    }
    return track(w, 6.0, 0.0);
}

} // namespace

ControlCommand oracle_controls(const WorldState& w) {
    switch (w.kind) {
    case ScenarioKind::Merging: return merging_controls(w);
    case ScenarioKind::Overtaking: return overtaking_controls(w);
    case ScenarioKind::EmergencyBrake: return embrake_controls(w);
    case ScenarioKind::GiveWay: return giveway_controls(w);
    case ScenarioKind::TrafficSign: return trafficsign_controls(w);
    }
    return {};
}

OracleStep oracle_policy(const WorldState& w, const TeacherProjection& proj) {
    OracleStep step_out;
    step_out.controls = oracle_controls(w);
    step_out.teacher_feature = proj.apply(privileged_state(w));

    // forward-simulate the oracle to read off its future poses
    WorldState sim = w;
    for (int k = 0; k < kWaypointCount; ++k) {
        for (int i = 0; i < kRecordEvery; ++i) {
            if (sim.done) break;
            step(sim, oracle_controls(sim));
        }
        step_out.waypoints[k] = to_ego_frame(w.x, w.y, w.heading, sim.x, sim.y);
    }
    return step_out;
}

EpisodeRecord rollout_oracle(ScenarioKind kind, uint64_t seed, double t_max,
                             const TeacherProjection& proj) {
    WorldState w = spawn_scenario(kind, seed);
    w.t_max = t_max;
    EpisodeRecord ep;
    ep.kind = kind;
    ep.seed = seed;

    double base_progress = w.max_x;
    int base_violations = 0;
    bool base_collided = false;
    auto settle_reward = [&](StepRecord& rec) {
        double r = (w.max_x - base_progress);
        r -= 100.0 * double(w.collided && !base_collided);
        r -= 10.0 * double(w.violation_count() - base_violations);
        rec.oracle.reward = r;
        base_progress = w.max_x;
        base_violations = w.violation_count();
        base_collided = w.collided;
    };

    int phys = 0;
    while (!w.done) {
        if (phys % kRecordEvery == 0) {
            if (!ep.steps.empty()) settle_reward(ep.steps.back());
            StepRecord rec;
            rec.t = w.t;
            rec.obs = observe(w);
            rec.oracle = oracle_policy(w, proj);
            ep.steps.push_back(std::move(rec));
        }
        step(w, oracle_controls(w));
        ++phys;
    }
    if (!ep.steps.empty()) settle_reward(ep.steps.back());

    // value_t = reward_t + gamma * value_{t+1}, terminal value 0
    double v = 0.0;
    for (auto it = ep.steps.rbegin(); it != ep.steps.rend(); ++it) {
        v = it->oracle.reward + kGamma * v;
        it->oracle.value = v;
    }

    ep.success = w.success();
    ep.collision = w.collided;
    ep.timeout = w.timed_out();
    ep.completion = w.completion();
    return ep;
}

} // namespace moedrive
