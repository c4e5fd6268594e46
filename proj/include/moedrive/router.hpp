#pragma once

#include "moedrive/sim.hpp"
#include "moedrive/tensor.hpp"

namespace moedrive {

/// Router output over the five scene experts plus its normalized-entropy
/// uncertainty.
struct RouterDistribution {
    Tensor1 probs;      // kNumScenarios entries, sum 1
    double uncertainty; // U in [0, 1]
};

/// Result of the dual-aware selection rule. selected_expert uses the
/// model-wide convention: 0 = global, 1 + kind = scene expert.
struct RoutingDecision {
    bool global = false;
    ScenarioKind kind = ScenarioKind::Merging; // valid when !global
    RouterDistribution distribution;
    double tau = 0;

    int selected_expert() const { return global ? 0 : 1 + int(kind); }
};

/// U = -sum p ln p / ln N with 0 ln 0 = 0. Throws on negative entries or
/// a sum off 1 by more than 1e-9.
double normalized_entropy(const Tensor1& probs);

RouterDistribution make_distribution(const Tensor1& probs);

/// Global expert when U >= tau; otherwise the argmax scene expert
/// (lowest index on exact ties).
RoutingDecision select(const RouterDistribution& dist, double tau);

/// Cross-entropy against the expert assigned to the true kind:
/// -ln(max(p_kind, 1e-12)).
double scenario_loss(const Tensor1& probs, ScenarioKind true_kind);

} // namespace moedrive
