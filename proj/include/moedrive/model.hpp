#pragma once

#include <array>
#include <string>
#include <vector>

#include "moedrive/obs.hpp"
#include "moedrive/oracle.hpp"
#include "moedrive/tape.hpp"

namespace moedrive {

namespace dims {
constexpr int kGridIn = Observation::kGridSize; // 3072
constexpr int kImgHidden1 = 512;
constexpr int kImgHidden2 = 256;
constexpr int kImgFeat = 128;
constexpr int kMeasIn = 9; // speed/10 ++ command one-hot(6) ++ goal/50
constexpr int kMeasHidden1 = 64;
constexpr int kMeasHidden2 = 32;
constexpr int kMeasFeat = 32;
constexpr int kFused = kImgFeat + kMeasFeat; // 160
constexpr int kBottleneck = 256;
constexpr int kGruHidden = 64;
constexpr int kGruIn = 2; // previous waypoint
constexpr int kRouterHidden = 64;
constexpr int kFeat = kTeacherFeatDim; // distillation feature, 64
constexpr int kNumExperts = 6;         // global + one per scenario kind
} // namespace dims

/// Occupancy-raster encoder (3072 -> 512 -> 256 -> 128, tanh on hidden
/// layers). Runs whole batches through flat GEMMs; the rest of the model
/// is cheap enough to stay on the per-sample tape.
class ImageEncoder {
public:
    struct Cache {
        int batch = 0;
        std::vector<double> x, h1, h2, out; // row-major batch activations
    };

    void init(ParamSet& ps);
    void forward(const std::vector<const Observation*>& batch, Cache& cache) const;
    Tensor1 feature_of(const Cache& cache, int i) const;
    /// Accumulates parameter gradients given per-sample output adjoints.
    void backward(const Cache& cache, const std::vector<Tensor1>& d_out);

private:
    Param *W1_ = nullptr, *b1_ = nullptr;
    Param *W2_ = nullptr, *b2_ = nullptr;
    Param *W3_ = nullptr, *b3_ = nullptr;
};

struct ExpertParams {
    Param *down1W, *down1b; // fused -> 256
    Param *down2W, *down2b; // 256 -> 256
    Param *h0W, *h0b;       // 256 -> gru hidden
    GruParams gru;          // input = previous waypoint (2)
    Param *wpW, *wpb;       // hidden -> displacement (2)
    Param *valW, *valb;     // 256 -> 1
    Param *featW, *featb;   // 256 -> 64
};

/// Plain-value expert output.
struct ExpertOutput {
    std::array<Vec2, kWaypointCount> waypoints{};
    double value = 0;
    Tensor1 feature; // dims::kFeat
};

/// Tape handles for one expert forward pass.
struct ExpertNodes {
    std::array<Tape::NodeId, kWaypointCount> waypoints{};
    Tape::NodeId value = -1;
    Tape::NodeId feature = -1;
};

/// Expert index convention: 0 = global, 1 + kind = that scene expert.
inline int expert_of_kind(ScenarioKind k) { return 1 + int(k); }

class Model {
public:
    explicit Model(uint64_t seed);

    ParamSet params;
    ImageEncoder image_encoder;

    // tape builders
    Tape::NodeId measurement_feature(Tape& t, const Observation& obs);
    Tape::NodeId measurement_feature(Tape& t, double speed, const Tensor1& command_onehot,
                                     double goal_x, double goal_y);
    Tape::NodeId fuse(Tape& t, Tape::NodeId img_feat, Tape::NodeId meas_feat);
    ExpertNodes expert_forward(Tape& t, int expert, Tape::NodeId fused);
    Tape::NodeId router_logits(Tape& t, Tape::NodeId fused);
    Tape::NodeId speed_head(Tape& t, Tape::NodeId fused);

    // forward-only conveniences
    Tensor1 image_feature(const Observation& obs) const;
    Tensor1 fused_feature(const Observation& obs);
    ExpertOutput run_expert(int expert, const Tensor1& fused);
    std::array<ExpertOutput, dims::kNumExperts> forward_all(const Tensor1& fused);
    Tensor1 router_probs(const Tensor1& fused);
    double predict_speed(const Tensor1& fused);

    const ExpertParams& expert(int i) const { return experts_[i]; }
    uint64_t seed() const { return seed_; }

private:
    uint64_t seed_;
    std::array<ExpertParams, dims::kNumExperts> experts_;
    Param *routerW1_, *routerb1_, *routerW2_, *routerb2_;
    Param *speedW_, *speedb_;
};

/// One-hot helper; throws unless exactly one bit is set.
std::size_t onehot_index(const Tensor1& onehot);

// checkpoint io (versioned, self-describing JSON)
struct CheckpointMeta {
    int format_version = 1;
    std::string variant = "geminus";
    double tau = 0.5;
    uint64_t seed = 0;
    std::string dataset_manifest_hash;
    // loss weights recorded for provenance
    double w_traj = 1, w_feat = 0.05, w_value = 0.001;
    double w_global = 1, w_adaptive = 1, w_scenario = 1, w_speed = 0.05;
};

void save_checkpoint(const Model& m, const CheckpointMeta& meta, const std::string& path);
Model load_checkpoint(const std::string& path, CheckpointMeta* meta_out = nullptr);

} // namespace moedrive
