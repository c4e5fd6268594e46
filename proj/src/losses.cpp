#include "moedrive/losses.hpp"

#include <cmath>

#include "moedrive/errors.hpp"

namespace moedrive {

const char* variant_name(Variant v) {
    switch (v) {
    case Variant::Geminus: return "geminus";
    case Variant::ScenarioMoe: return "scenario_moe";
    case Variant::VanillaMoe: return "vanilla_moe";
    case Variant::SingleExpert: return "single_expert";
    }
    return "?";
}

Variant variant_from_name(const std::string& s) {
    for (int v = 0; v < 4; ++v)
        if (s == variant_name(Variant(v))) return Variant(v);
    throw ConfigError("unknown variant: " + s);
}

double traj_loss(const std::array<Vec2, kWaypointCount>& pred,
                 const std::array<Vec2, kWaypointCount>& truth) {
    double s = 0.0;
    for (int k = 0; k < kWaypointCount; ++k)
        s += std::abs(pred[k].x - truth[k].x) + std::abs(pred[k].y - truth[k].y);
    return s;
}

double feature_loss(const Tensor1& pred, const Tensor1& teacher) {
    require_len(teacher, pred.size(), "feature_loss");
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        double d = pred[i] - teacher[i];
        s += d * d;
    }
    return std::sqrt(s);
}

double value_loss(double pred, double teacher) {
    double d = pred - teacher;
    return d * d;
}

namespace {

struct ExpertLossNodes {
    Tape::NodeId traj, feat, value;
};

ExpertLossNodes expert_losses(Tape& t, Model& m, int expert, Tape::NodeId fused,
                              const OracleStep& oracle) {
    ExpertNodes e = m.expert_forward(t, expert, fused);
    std::array<Tape::NodeId, kWaypointCount> per_step;
    for (int k = 0; k < kWaypointCount; ++k)
        per_step[k] =
            t.l1_to(e.waypoints[k], Tensor1{oracle.waypoints[k].x, oracle.waypoints[k].y});
    std::array<double, kWaypointCount> ones{1, 1, 1, 1};
    ExpertLossNodes out;
    out.traj = t.weighted_sum(per_step, ones);
    out.feat = t.l2norm_to(e.feature, oracle.teacher_feature);
    out.value = t.sqdiff_to(e.value, oracle.value);
    return out;
}

} // namespace

SampleLossNodes build_sample_loss(Tape& t, Model& m, const Tensor1& img_feat,
                                  const TrainSample& s, const LossWeights& w, Variant v) {
    if (!s.obs || !s.oracle) throw DataError("sample_loss: missing observation or targets");
    if (s.oracle->teacher_feature.size() != std::size_t(dims::kFeat))
        throw DataError("sample_loss: missing or malformed teacher feature target");

    SampleLossNodes out;
    out.img_leaf = t.input_grad(img_feat);
    auto meas = m.measurement_feature(t, *s.obs);
    auto fused = m.fuse(t, out.img_leaf, meas);

    std::vector<Tape::NodeId> nodes;
    std::vector<double> weights;
    auto push = [&](Tape::NodeId id, double weight) {
        nodes.push_back(id);
        weights.push_back(weight);
    };

    bool has_global = v == Variant::Geminus || v == Variant::SingleExpert;
    bool has_adaptive = v != Variant::SingleExpert;
    bool has_scenario = v == Variant::Geminus || v == Variant::ScenarioMoe;
    bool needs_router = has_scenario || v == Variant::VanillaMoe;

    if (needs_router) out.probs = t.softmax_op(m.router_logits(t, fused));

    if (has_global) {
        ExpertLossNodes g = expert_losses(t, m, 0, fused, *s.oracle);
        out.breakdown.traj_global = t.scalar(g.traj);
        out.breakdown.feat_global = t.scalar(g.feat);
        out.breakdown.value_global = t.scalar(g.value);
        push(g.traj, w.global_group * w.traj);
        push(g.feat, w.global_group * w.feature);
        push(g.value, w.global_group * w.value);
    }
    if (has_adaptive) {
        int expert;
        if (v == Variant::VanillaMoe) {
            const Tensor1& p = t.value(out.probs);
            std::size_t best = 0;
            for (std::size_t i = 1; i < p.size(); ++i)
                if (p[i] > p[best]) best = i;
            expert = 1 + int(best);
        } else {
            expert = expert_of_kind(s.kind); // hard routing by the sample's label
        }
        out.adaptive_expert = expert;
        ExpertLossNodes a = expert_losses(t, m, expert, fused, *s.oracle);
        out.breakdown.traj_adaptive = t.scalar(a.traj);
        out.breakdown.feat_adaptive = t.scalar(a.feat);
        out.breakdown.value_adaptive = t.scalar(a.value);
        push(a.traj, w.adaptive_group * w.traj);
        push(a.feat, w.adaptive_group * w.feature);
        push(a.value, w.adaptive_group * w.value);
    }
    if (has_scenario) {
        auto sc = t.neg_log_pick(out.probs, std::size_t(int(s.kind)));
        out.breakdown.scenario = t.scalar(sc);
        push(sc, w.scenario);
    }
    {
        auto sp = t.absdiff_to(m.speed_head(t, fused), s.obs->speed);
        out.breakdown.speed = t.scalar(sp);
        push(sp, w.speed);
    }

    out.total = t.weighted_sum(nodes, weights);
    out.breakdown.total = t.scalar(out.total);
    return out;
}

LossBreakdown sample_loss(Model& m, const TrainSample& s, const LossWeights& w, Variant v,
                          bool backward) {
    if (!s.obs || !s.oracle) throw DataError("sample_loss: missing observation or targets");
    ImageEncoder::Cache cache;
    m.image_encoder.forward({s.obs}, cache);
    Tape t;
    SampleLossNodes nodes = build_sample_loss(t, m, m.image_encoder.feature_of(cache, 0), s, w, v);
    if (backward) {
        t.backward(nodes.total);
        m.image_encoder.backward(cache, {t.adjoint(nodes.img_leaf)});
    }
    return nodes.breakdown;
}

} // namespace moedrive
