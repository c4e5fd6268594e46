#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "moedrive/oracle.hpp"

namespace moedrive {

struct ClipInfo {
    ScenarioKind kind = ScenarioKind::Merging;
    uint64_t seed = 0;
    bool val = false;
    int steps = 0;
};

/// A generated corpus of oracle clips plus the frozen teacher projection
/// and its train/val split.
struct Dataset {
    uint64_t master_seed = 0;
    TeacherProjection projection;
    std::vector<EpisodeRecord> clips;
    std::vector<ClipInfo> info; // aligned with clips

    struct SampleRef {
        int clip = 0;
        int step = 0;
    };
    std::vector<SampleRef> samples(bool val) const;
    std::vector<SampleRef> samples_of_kind(bool val, ScenarioKind k) const;
    const StepRecord& at(SampleRef r) const { return clips[r.clip].steps[r.step]; }
    ScenarioKind kind_of(SampleRef r) const { return clips[r.clip].kind; }
};

/// Deterministic dataset generation: clips_per_kind[k] oracle clips per
/// scenario kind, last ~5% of each kind held out for validation.
Dataset generate_dataset(const std::vector<int>& clips_per_kind, uint64_t seed,
                         double t_max = simconf::kTMaxDefault);

/// Writes <dir>/data.jsonl (one step per line) and <dir>/manifest.json
/// (seed list, split, projection matrix).
void write_dataset(const Dataset& ds, const std::string& dir);

Dataset load_dataset(const std::string& dir);

/// FNV-1a 64 over a file's bytes, as 16 hex chars.
std::string hash_file(const std::string& path);
std::string hash_bytes(const std::string& bytes);

/// Hash of <dir>/manifest.json; identifies a dataset in checkpoints.
std::string dataset_manifest_hash(const std::string& dir);

} // namespace moedrive
