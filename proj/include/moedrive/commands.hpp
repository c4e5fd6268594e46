#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "moedrive/trainer.hpp"

namespace moedrive {

struct GenDataArgs {
    std::string out;
    std::vector<int> clips_per_kind; // 1 entry = uniform, else one per kind
    uint64_t seed = 7;
    double t_max = simconf::kTMaxDefault;
};

struct TrainArgs {
    std::string config_path;
    std::string data_dir;
    std::string out_dir;
};

struct EvalArgs {
    std::string checkpoint;
    std::string report_dir;
    std::string data_dir; // optional: adds open-loop validation analysis
    int episodes_per_kind = 20;
    double tau = -1; // < 0: use the checkpoint's tau
    uint64_t seed = 2025;
    bool trace = false;
};

struct SweepArgs {
    std::string checkpoint;
    std::string data_dir; // required: validation-set utilization column
    std::string out_dir;
    double from = 0.0, to = 1.0, step = 0.1;
    int episodes_per_kind = 20;
    uint64_t seed = 2025;
};

struct AblateArgs {
    std::string data_dir;
    std::string out_dir;
    std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};
    int epochs = 12;
    int batch_size = 32;
    int episodes_per_kind = 10;
    double tau = 0.5;
    uint64_t eval_seed = 2025;
};

int cmd_gen_data(const GenDataArgs& args);
int cmd_train(const TrainArgs& args);
int cmd_eval(const EvalArgs& args);
int cmd_sweep_tau(const SweepArgs& args);
int cmd_ablate(const AblateArgs& args);

TrainConfig parse_train_config(const std::string& path);
std::string canonical_config(const TrainConfig& cfg);

// exit codes used by the CLI
constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitDataError = 3;
constexpr int kExitModelError = 4;
constexpr int kExitInternalError = 5;

} // namespace moedrive
