#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "moedrive/sim.hpp"

namespace moedrive {

constexpr int kWaypointCount = 4;
constexpr int kTeacherFeatDim = 64;

/// Frozen random linear map of the privileged state, generated once per
/// dataset and stored in its manifest. Stands in for a learned teacher's
/// feature head: informative, fixed, and reproducible.
struct TeacherProjection {
    Tensor2 m; // kTeacherFeatDim x kPrivStateDim

    static TeacherProjection from_seed(uint64_t seed);
    Tensor1 apply(const Tensor1& priv_state) const;
};

/// One supervision step from the privileged teacher.
struct OracleStep {
    std::array<Vec2, kWaypointCount> waypoints{}; // ego frame, +0.5 s .. +2.0 s
    double value = 0;                             // discounted return, filled post-episode
    Tensor1 teacher_feature;                      // kTeacherFeatDim
    ControlCommand controls;                      // at the record instant
    double reward = 0;                            // accrued until the next record
};

struct StepRecord {
    double t = 0;
    Observation obs;
    OracleStep oracle;
};

struct EpisodeRecord {
    ScenarioKind kind = ScenarioKind::Merging;
    uint64_t seed = 0;
    std::vector<StepRecord> steps;
    bool success = false;
    bool collision = false;
    bool timeout = false;
    double completion = 0;
};

/// Scripted privileged controls for the current state (20 Hz).
ControlCommand oracle_controls(const WorldState& w);

/// Full supervision record at one instant: controls, waypoints from a
/// forward simulation under the oracle, and the projected teacher
/// feature. value/reward are zero here and filled in by rollout_oracle.
OracleStep oracle_policy(const WorldState& w, const TeacherProjection& proj);

/// Closed-loop oracle episode: 20 Hz control, 2 Hz records, rewards
/// (progress - 100 per collision - 10 per rule violation) and discounted
/// values (gamma = 0.99) filled in post-hoc.
EpisodeRecord rollout_oracle(ScenarioKind kind, uint64_t seed, double t_max,
                             const TeacherProjection& proj);

/// p (world) -> ego frame of the given pose.
Vec2 to_ego_frame(double ex, double ey, double eheading, double px, double py);

} // namespace moedrive
