#pragma once

#include "moedrive/model.hpp"
#include "moedrive/router.hpp"

namespace moedrive {

/// Loss term weights; defaults follow the training recipe.
struct LossWeights {
    double traj = 1.0;
    double feature = 0.05;
    double value = 0.001;
    double global_group = 1.0;
    double adaptive_group = 1.0;
    double scenario = 1.0;
    double speed = 0.05;
};

/// Every term of the composite objective, unweighted, plus the weighted
/// total. total is always reproducible from the parts and the weights.
struct LossBreakdown {
    double traj_global = 0, feat_global = 0, value_global = 0;
    double traj_adaptive = 0, feat_adaptive = 0, value_adaptive = 0;
    double scenario = 0, speed = 0;
    double total = 0;

    double recompute_total(const LossWeights& w) const {
        return w.global_group * (w.traj * traj_global + w.feature * feat_global +
                                 w.value * value_global) +
               w.adaptive_group * (w.traj * traj_adaptive + w.feature * feat_adaptive +
                                   w.value * value_adaptive) +
               w.scenario * scenario + w.speed * speed;
    }
};

enum class Variant : int {
    Geminus = 0,      // global + scene experts, dual-aware routing
    ScenarioMoe = 1,  // scene experts + scenario routing, no global fallback
    VanillaMoe = 2,   // scene experts, learned top-1 + load balance aux
    SingleExpert = 3, // global expert only
};
const char* variant_name(Variant v);
Variant variant_from_name(const std::string& s);

/// Sum over steps of |dx| + |dy| against the reference trajectory.
double traj_loss(const std::array<Vec2, kWaypointCount>& pred,
                 const std::array<Vec2, kWaypointCount>& truth);
/// Unsquared Euclidean distance.
double feature_loss(const Tensor1& pred, const Tensor1& teacher);
/// Squared difference.
double value_loss(double pred, double teacher);

struct TrainSample {
    ScenarioKind kind = ScenarioKind::Merging;
    const Observation* obs = nullptr;
    const OracleStep* oracle = nullptr;
};

/// Tape handles for one sample's composite loss.
struct SampleLossNodes {
    Tape::NodeId total = -1;
    Tape::NodeId img_leaf = -1; // feed its adjoint back into the image encoder
    Tape::NodeId probs = -1;    // router distribution node, -1 when unused
    int adaptive_expert = -1;   // expert index charged with the adaptive term
    LossBreakdown breakdown;
};

/// Builds the composite loss for one sample on the given tape.
/// Train-time adaptive routing is by ground-truth scenario label except
/// for VanillaMoe, which routes by the router's own argmax.
SampleLossNodes build_sample_loss(Tape& t, Model& m, const Tensor1& img_feat,
                                  const TrainSample& s, const LossWeights& w, Variant v);

/// Standalone single-sample loss (runs the image encoder itself).
/// With `backward` set, accumulates gradients for the whole model.
LossBreakdown sample_loss(Model& m, const TrainSample& s, const LossWeights& w, Variant v,
                          bool backward = false);

} // namespace moedrive
