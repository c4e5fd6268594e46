#pragma once

#include <optional>
#include <vector>

#include "moedrive/dataset.hpp"
#include "moedrive/losses.hpp"

namespace moedrive {

struct TrainConfig {
    double lr = 1e-4;
    double weight_decay = 1e-7;
    int batch_size = 32;
    int epochs = 32;
    double lr_decay_factor = 2.0;
    int lr_decay_epoch = -1; // default: round(epochs * 30 / 32)
    uint64_t seed = 1;
    double tau = 0.5;
    Variant variant = Variant::Geminus;
    LossWeights weights;

    int effective_decay_epoch() const {
        return lr_decay_epoch >= 0 ? lr_decay_epoch : int(epochs * 30.0 / 32.0 + 0.5);
    }
    void validate() const;
};

struct EpochStats {
    int epoch = 0;
    double lr = 0;
    LossBreakdown mean;    // mean per-sample terms over the epoch
    double aux_balance = 0; // vanilla_moe load-balance value, mean over batches
    int samples = 0;
};

struct TrainResult {
    Model model;
    std::vector<EpochStats> log;
};

/// Joint training of encoders, experts and router with Adam; fully
/// deterministic given (config, dataset).
TrainResult train(const TrainConfig& cfg, const Dataset& ds);

constexpr double kLoadBalanceCoeff = 0.01;

} // namespace moedrive
