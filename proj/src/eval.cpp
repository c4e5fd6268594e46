#include "moedrive/eval.hpp"

#include <cmath>

#include "moedrive/controller.hpp"
#include "moedrive/rng.hpp"

namespace moedrive {

using namespace simconf;

PlanResult plan_step(Model& m, const Observation& obs, Variant v, double tau) {
    Tensor1 fused = m.fused_feature(obs);
    PlanResult out;
    RouterDistribution dist = make_distribution(m.router_probs(fused));
    switch (v) {
    case Variant::Geminus:
        out.decision = select(dist, tau);
        break;
    case Variant::ScenarioMoe:
    case Variant::VanillaMoe: {
        RoutingDecision d = select(dist, 1.0); // argmax branch unless exactly uniform
        if (d.global) {
            d.global = false;
            d.kind = ScenarioKind(0);
        }
        out.decision = d;
        break;
    }
    case Variant::SingleExpert: {
        RoutingDecision d;
        d.global = true;
        d.distribution = dist;
        d.tau = tau;
        out.decision = d;
        break;
    }
    }
    ExpertOutput e = m.run_expert(out.decision.selected_expert(), fused);
    out.waypoints = e.waypoints;
    out.speed_pred = m.predict_speed(fused);
    return out;
}

Metrics aggregate_metrics(const std::vector<EpisodeStats>& eps) {
    Metrics m;
    m.episodes = int(eps.size());
    std::array<int, kNumScenarios> n{}, succ{};
    for (const auto& e : eps) {
        m.driving_score += e.score;
        m.success_rate += e.success ? 100.0 : 0.0;
        ++n[int(e.kind)];
        succ[int(e.kind)] += e.success;
    }
    if (!eps.empty()) {
        m.driving_score /= eps.size();
        m.success_rate /= eps.size();
    }
    int defined = 0;
    for (int k = 0; k < kNumScenarios; ++k) {
        if (n[k] > 0) {
            m.ability[k] = 100.0 * succ[k] / n[k];
            m.ability_mean += m.ability[k];
            ++defined;
        } else {
            m.ability[k] = -1;
        }
    }
    if (defined > 0) m.ability_mean /= defined;
    return m;
}

EvalResult evaluate_closed_loop(Model& m, Variant v, double tau, int episodes_per_kind,
                                uint64_t eval_seed, double t_max) {
    EvalResult result;
    std::array<std::array<int, 1 + kNumScenarios>, dims::kNumExperts> counts{};
    std::array<int, 1 + kNumScenarios> col_totals{};

    int episode_id = 0;
    for (int k = 0; k < kNumScenarios; ++k) {
        for (int i = 0; i < episodes_per_kind; ++i, ++episode_id) {
            uint64_t seed = mix_seed(eval_seed, 0xe5a10000ULL + uint64_t(k) * 4096 + uint64_t(i));
            WorldState w = spawn_scenario(ScenarioKind(k), seed);
            w.t_max = t_max;
            PidState lon = make_longitudinal_pid();
            PidState lat = make_lateral_pid();

            // waypoints are re-anchored to the world at each plan step so
            // the 20 Hz controller tracks a consistent target
            std::array<Vec2, kWaypointCount> world_wps{};
            int phys = 0;
            while (!w.done) {
                if (phys % kRecordEvery == 0) {
                    Observation obs = observe(w);
                    PlanResult plan = plan_step(m, obs, v, tau);
                    double ch = std::cos(w.heading), sh = std::sin(w.heading);
                    for (int j = 0; j < kWaypointCount; ++j) {
                        const Vec2& p = plan.waypoints[j];
                        world_wps[j] = {w.x + ch * p.x - sh * p.y, w.y + sh * p.x + ch * p.y};
                    }
                    int sel = plan.decision.selected_expert();
                    ++counts[sel][0];
                    ++counts[sel][1 + k];
                    ++col_totals[0];
                    ++col_totals[1 + k];
                    result.trace.push_back({episode_id, ScenarioKind(k), w.t,
                                            plan.decision.distribution.probs,
                                            plan.decision.distribution.uncertainty, sel});
                }
                std::array<Vec2, kWaypointCount> ego_wps;
                for (int j = 0; j < kWaypointCount; ++j)
                    ego_wps[j] = to_ego_frame(w.x, w.y, w.heading, world_wps[j].x, world_wps[j].y);
                ControlCommand c;
                auto [thr, brk] = longitudinal(ego_wps, w.v, lon, kDt);
                c.throttle = thr;
                c.brake = brk;
                c.steer = lateral(ego_wps, lat, kDt);
                step(w, c);
                ++phys;
            }

            EpisodeStats st;
            st.kind = ScenarioKind(k);
            st.seed = seed;
            st.success = w.success();
            st.collision = w.collided;
            st.timeout = w.timed_out();
            st.violations = w.violation_count();
            st.completion = w.completion();
            st.score = 100.0 * st.completion * std::pow(0.5, st.collision ? 1 : 0) *
                       std::pow(0.7, st.violations);
            result.episodes.push_back(st);
        }
    }
    result.metrics = aggregate_metrics(result.episodes);
    for (int e = 0; e < dims::kNumExperts; ++e)
        for (int c = 0; c < 1 + kNumScenarios; ++c)
            result.utilization[e][c] =
                col_totals[c] > 0 ? 100.0 * counts[e][c] / col_totals[c] : 0.0;
    return result;
}

OpenLoopStats open_loop_analysis(Model& m, const Dataset& ds, bool val_split, Variant v,
                                 double tau) {
    OpenLoopStats st;
    std::array<std::array<int, 1 + kNumScenarios>, dims::kNumExperts> counts{};
    std::array<int, 1 + kNumScenarios> col_totals{};
    std::array<int, kNumScenarios> correct{};

    auto refs = ds.samples(val_split ? true : false);
    for (const auto& ref : refs) {
        const StepRecord& rec = ds.at(ref);
        int kind = int(ds.kind_of(ref));
        PlanResult plan = plan_step(m, rec.obs, v, tau);
        const Tensor1& probs = plan.decision.distribution.probs;
        std::size_t best = 0;
        for (std::size_t i = 1; i < probs.size(); ++i)
            if (probs[i] > probs[best]) best = i;
        if (int(best) == kind) ++correct[kind];
        ++st.samples_per_kind[kind];
        ++st.samples;
        st.uncertainties.push_back(plan.decision.distribution.uncertainty);

        int sel = plan.decision.selected_expert();
        ++counts[sel][0];
        ++counts[sel][1 + kind];
        ++col_totals[0];
        ++col_totals[1 + kind];

        st.speed_mae += std::abs(plan.speed_pred - rec.obs.speed);
        st.waypoint_l1 += traj_loss(plan.waypoints, rec.oracle.waypoints);
    }
    int correct_total = 0;
    for (int k = 0; k < kNumScenarios; ++k) {
        correct_total += correct[k];
        st.router_acc[k] =
            st.samples_per_kind[k] > 0 ? 100.0 * correct[k] / st.samples_per_kind[k] : -1.0;
    }
    if (st.samples > 0) {
        st.router_acc_overall = 100.0 * correct_total / st.samples;
        st.speed_mae /= st.samples;
        st.waypoint_l1 /= st.samples;
    }
    for (int e = 0; e < dims::kNumExperts; ++e)
        for (int c = 0; c < 1 + kNumScenarios; ++c)
            st.utilization[e][c] = col_totals[c] > 0 ? 100.0 * counts[e][c] / col_totals[c] : 0.0;
    return st;
}

} // namespace moedrive
