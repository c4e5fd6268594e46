#pragma once

#include <array>
#include <vector>

#include "moedrive/dataset.hpp"
#include "moedrive/losses.hpp"
#include "moedrive/router.hpp"

namespace moedrive {

/// One 2 Hz planning step at inference time.
struct PlanResult {
    std::array<Vec2, kWaypointCount> waypoints{}; // ego frame at plan time
    RoutingDecision decision;                     // selection actually used
    double speed_pred = 0;
};

/// Variant-aware planning: Geminus applies the uncertainty threshold,
/// ScenarioMoe/VanillaMoe always take the argmax scene expert,
/// SingleExpert always takes the global expert.
PlanResult plan_step(Model& m, const Observation& obs, Variant v, double tau);

struct EpisodeStats {
    ScenarioKind kind = ScenarioKind::Merging;
    uint64_t seed = 0;
    bool success = false, collision = false, timeout = false;
    int violations = 0;
    double completion = 0;
    double score = 0; // 100 * completion * 0.5^collisions * 0.7^violations
};

struct Metrics {
    double success_rate = 0;      // percent
    double driving_score = 0;     // [0, 100]
    std::array<double, kNumScenarios> ability{}; // per-kind success percent
    double ability_mean = 0;
    int episodes = 0;
};

struct TraceRow {
    int episode = 0;
    ScenarioKind true_kind = ScenarioKind::Merging;
    double t = 0;
    Tensor1 probs;
    double uncertainty = 0;
    int selected = 0; // expert index, 0 = global
};

using UtilizationTable = std::array<std::array<double, 1 + kNumScenarios>, dims::kNumExperts>;

struct EvalResult {
    Metrics metrics;
    std::vector<EpisodeStats> episodes;
    std::vector<TraceRow> trace;
    UtilizationTable utilization{}; // percent, cols: overall ++ per true kind
};

Metrics aggregate_metrics(const std::vector<EpisodeStats>& eps);

/// Runs episodes_per_kind closed-loop episodes per scenario kind with
/// 2 Hz planning and 20 Hz PID control.
EvalResult evaluate_closed_loop(Model& m, Variant v, double tau, int episodes_per_kind,
                                uint64_t eval_seed, double t_max = simconf::kTMaxDefault);

/// Open-loop statistics on a dataset split: per-kind router accuracy,
/// expert utilization under the variant's selection rule, speed MAE and
/// the raw per-sample uncertainties (for threshold sweeps).
struct OpenLoopStats {
    std::array<double, kNumScenarios> router_acc{}; // percent; -1 without samples
    double router_acc_overall = 0;
    std::array<int, kNumScenarios> samples_per_kind{};
    int samples = 0;
    UtilizationTable utilization{};
    double speed_mae = 0;
    double waypoint_l1 = 0; // mean open-loop trajectory error of the active expert
    std::vector<double> uncertainties;
};

OpenLoopStats open_loop_analysis(Model& m, const Dataset& ds, bool val_split, Variant v,
                                 double tau);

} // namespace moedrive
