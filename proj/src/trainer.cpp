#include "moedrive/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "moedrive/adam.hpp"
#include "moedrive/errors.hpp"
#include "moedrive/rng.hpp"

namespace moedrive {

void TrainConfig::validate() const {
    if (!(lr > 0)) throw ConfigError("train: lr must be positive");
    if (batch_size <= 0) throw ConfigError("train: batch_size must be positive");
    if (epochs <= 0) throw ConfigError("train: epochs must be positive");
    if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("train: tau outside [0,1]");
    if (weight_decay < 0) throw ConfigError("train: negative weight_decay");
    if (!(lr_decay_factor > 0)) throw ConfigError("train: lr_decay_factor must be positive");
}

TrainResult train(const TrainConfig& cfg, const Dataset& ds) {
    cfg.validate();
    for (int k = 0; k < kNumScenarios; ++k) {
        if (ds.samples_of_kind(false, ScenarioKind(k)).empty())
            throw DataError(std::string("train: empty scenario subset: ") +
                            scenario_name(ScenarioKind(k)));
    }
    auto refs = ds.samples(false);
    for (const auto& r : refs) {
        const StepRecord& rec = ds.at(r);
        if (rec.oracle.teacher_feature.size() != std::size_t(dims::kFeat))
            throw DataError("train: sample missing teacher feature target");
    }

    TrainResult result{Model(cfg.seed), {}};
    Model& model = result.model;
    Adam opt(cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay);

    int decay_at = cfg.effective_decay_epoch();
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double lr = epoch >= decay_at ? cfg.lr / cfg.lr_decay_factor : cfg.lr;
        opt.set_lr(lr);

        // deterministic per-epoch shuffle
        Rng shuffle_rng(mix_seed(cfg.seed, 0xe90c0000ULL + uint64_t(epoch)));
        std::vector<Dataset::SampleRef> order = refs;
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.below(i)]);

        EpochStats stats;
        stats.epoch = epoch;
        stats.lr = lr;
        int batches = 0;

        for (std::size_t start = 0; start < order.size(); start += std::size_t(cfg.batch_size)) {
            std::size_t end = std::min(order.size(), start + std::size_t(cfg.batch_size));
            int B = int(end - start);
            model.params.zero_grads();

            std::vector<const Observation*> obs_batch(B);
            std::vector<TrainSample> samples(B);
            for (int i = 0; i < B; ++i) {
                const auto& ref = order[start + i];
                const StepRecord& rec = ds.at(ref);
                samples[i] = {ds.kind_of(ref), &rec.obs, &rec.oracle};
                obs_batch[i] = &rec.obs;
            }
            ImageEncoder::Cache cache;
            model.image_encoder.forward(obs_batch, cache);

            std::vector<Tape> tapes(B);
            std::vector<SampleLossNodes> nodes(B);
            for (int i = 0; i < B; ++i)
                nodes[i] = build_sample_loss(tapes[i], model, model.image_encoder.feature_of(cache, i),
                                             samples[i], cfg.weights, cfg.variant);

            // batch-level load balance for the vanilla arm:
            // coeff * N * sum_i mean_b(p_bi)^2
            if (cfg.variant == Variant::VanillaMoe) {
                Tensor1 importance(kNumScenarios, 0.0);
                for (int i = 0; i < B; ++i) {
                    const Tensor1& p = tapes[i].value(nodes[i].probs);
                    for (int k = 0; k < kNumScenarios; ++k) importance[k] += p[k] / B;
                }
                double lb = 0.0;
                for (double m : importance) lb += m * m;
                lb *= kNumScenarios;
                stats.aux_balance += kLoadBalanceCoeff * lb;
                Tensor1 seed(kNumScenarios);
                for (int k = 0; k < kNumScenarios; ++k)
                    seed[k] = kLoadBalanceCoeff * 2.0 * kNumScenarios * importance[k];
                for (int i = 0; i < B; ++i) tapes[i].seed_adjoint(nodes[i].probs, seed);
            }

            std::vector<Tensor1> d_img(B);
            for (int i = 0; i < B; ++i) {
                tapes[i].backward(nodes[i].total);
                d_img[i] = tapes[i].adjoint(nodes[i].img_leaf);
                const LossBreakdown& bd = nodes[i].breakdown;
                stats.mean.traj_global += bd.traj_global;
                stats.mean.feat_global += bd.feat_global;
                stats.mean.value_global += bd.value_global;
                stats.mean.traj_adaptive += bd.traj_adaptive;
                stats.mean.feat_adaptive += bd.feat_adaptive;
                stats.mean.value_adaptive += bd.value_adaptive;
                stats.mean.scenario += bd.scenario;
                stats.mean.speed += bd.speed;
                stats.mean.total += bd.total;
            }
            model.image_encoder.backward(cache, d_img);

            model.params.scale_grads(1.0 / B);
            opt.step(model.params);
            ++batches;
            stats.samples += B;
        }

        double inv = stats.samples > 0 ? 1.0 / stats.samples : 0.0;
        stats.mean.traj_global *= inv;
        stats.mean.feat_global *= inv;
        stats.mean.value_global *= inv;
        stats.mean.traj_adaptive *= inv;
        stats.mean.feat_adaptive *= inv;
        stats.mean.value_adaptive *= inv;
        stats.mean.scenario *= inv;
        stats.mean.speed *= inv;
        stats.mean.total *= inv;
        stats.aux_balance = batches > 0 ? stats.aux_balance / batches : 0.0;
        result.log.push_back(stats);
    }
    return result;
}

} // namespace moedrive
