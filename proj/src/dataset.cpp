#include "moedrive/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "moedrive/errors.hpp"
#include "moedrive/rng.hpp"

namespace moedrive {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::vector<Dataset::SampleRef> Dataset::samples(bool val) const {
    std::vector<SampleRef> out;
    for (int c = 0; c < int(clips.size()); ++c) {
        if (info[c].val != val) continue;
        for (int s = 0; s < int(clips[c].steps.size()); ++s) out.push_back({c, s});
    }
    return out;
}

std::vector<Dataset::SampleRef> Dataset::samples_of_kind(bool val, ScenarioKind k) const {
    std::vector<SampleRef> out;
    for (int c = 0; c < int(clips.size()); ++c) {
        if (info[c].val != val || clips[c].kind != k) continue;
        for (int s = 0; s < int(clips[c].steps.size()); ++s) out.push_back({c, s});
    }
    return out;
}

Dataset generate_dataset(const std::vector<int>& clips_per_kind, uint64_t seed, double t_max) {
    if (clips_per_kind.size() != std::size_t(kNumScenarios))
        throw DataError("generate_dataset: need one clip count per scenario kind");
    Dataset ds;
    ds.master_seed = seed;
    ds.projection = TeacherProjection::from_seed(seed);

    // validation share: ~5% of total, floor per kind, remainder to low ids
    int total = 0;
    for (int n : clips_per_kind) {
        if (n < 0) throw DataError("generate_dataset: negative clip count");
        total += n;
    }
    if (total == 0) throw DataError("generate_dataset: zero clips requested");
    int val_target = int(0.05 * total + 0.5);
    std::vector<int> val_count(kNumScenarios, 0);
    int assigned = 0;
    for (int k = 0; k < kNumScenarios; ++k) {
        val_count[k] = std::min(clips_per_kind[k], int(0.05 * clips_per_kind[k]));
        assigned += val_count[k];
    }
    for (int k = 0; k < kNumScenarios && assigned < val_target; ++k) {
        if (val_count[k] < clips_per_kind[k]) {
            ++val_count[k];
            ++assigned;
        }
    }

    for (int k = 0; k < kNumScenarios; ++k) {
        uint64_t kind_seed = mix_seed(seed, 0xc11b0000ULL + uint64_t(k));
        for (int i = 0; i < clips_per_kind[k]; ++i) {
            uint64_t clip_seed = mix_seed(kind_seed, uint64_t(i));
            EpisodeRecord ep = rollout_oracle(ScenarioKind(k), clip_seed, t_max, ds.projection);
            ClipInfo ci;
            ci.kind = ScenarioKind(k);
            ci.seed = clip_seed;
            ci.val = i >= clips_per_kind[k] - val_count[k];
            ci.steps = int(ep.steps.size());
            ds.clips.push_back(std::move(ep));
            ds.info.push_back(ci);
        }
    }
    return ds;
}

namespace {

json record_to_json(int clip, ScenarioKind kind, const StepRecord& r) {
    json j;
    j["clip"] = clip;
    j["scenario_id"] = int(kind);
    j["t"] = r.t;
    json obs;
    json grid = json::array();
    for (double v : r.obs.grid) grid.push_back(int(v)); // raster is binary
    obs["grid"] = std::move(grid);
    obs["speed"] = r.obs.speed;
    obs["command"] = r.obs.command;
    obs["goal"] = {r.obs.goal_x, r.obs.goal_y};
    j["obs"] = std::move(obs);
    json oracle;
    json wps = json::array();
    for (const Vec2& w : r.oracle.waypoints) {
        wps.push_back(w.x);
        wps.push_back(w.y);
    }
    oracle["waypoints"] = std::move(wps);
    oracle["value"] = r.oracle.value;
    oracle["feature"] = r.oracle.teacher_feature;
    oracle["controls"] = {r.oracle.controls.throttle, r.oracle.controls.brake,
                          r.oracle.controls.steer};
    j["oracle"] = std::move(oracle);
    j["reward"] = r.oracle.reward;
    return j;
}

StepRecord record_from_json(const json& j) {
    StepRecord r;
    r.t = j.at("t").get<double>();
    const json& obs = j.at("obs");
    const json& grid = obs.at("grid");
    r.obs.grid.reserve(grid.size());
    for (const auto& v : grid) r.obs.grid.push_back(v.get<double>());
    r.obs.speed = obs.at("speed").get<double>();
    r.obs.command = obs.at("command").get<int>();
    r.obs.goal_x = obs.at("goal")[0].get<double>();
    r.obs.goal_y = obs.at("goal")[1].get<double>();
    r.obs.validate();
    const json& oracle = j.at("oracle");
    const json& wps = oracle.at("waypoints");
    if (wps.size() != std::size_t(2 * kWaypointCount))
        throw DataError("dataset: oracle.waypoints must hold 8 reals");
    for (int k = 0; k < kWaypointCount; ++k)
        r.oracle.waypoints[k] = {wps[2 * k].get<double>(), wps[2 * k + 1].get<double>()};
    r.oracle.value = oracle.at("value").get<double>();
    for (const auto& v : oracle.at("feature")) r.oracle.teacher_feature.push_back(v.get<double>());
    r.oracle.controls.throttle = oracle.at("controls")[0].get<double>();
    r.oracle.controls.brake = oracle.at("controls")[1].get<double>();
    r.oracle.controls.steer = oracle.at("controls")[2].get<double>();
    r.oracle.reward = j.at("reward").get<double>();
    return r;
}

} // namespace

void write_dataset(const Dataset& ds, const std::string& dir) {
    fs::create_directories(dir);
    {
        std::ofstream out(fs::path(dir) / "data.jsonl");
        if (!out) throw DataError("write_dataset: cannot open " + dir + "/data.jsonl");
        for (int c = 0; c < int(ds.clips.size()); ++c)
            for (const StepRecord& r : ds.clips[c].steps)
                out << record_to_json(c, ds.clips[c].kind, r).dump() << "\n";
    }
    json m;
    m["format_version"] = 1;
    m["master_seed"] = ds.master_seed;
    json clips = json::array();
    for (int c = 0; c < int(ds.clips.size()); ++c) {
        const ClipInfo& ci = ds.info[c];
        json cj;
        cj["kind"] = int(ci.kind);
        cj["seed"] = ci.seed;
        cj["split"] = ci.val ? "val" : "train";
        cj["steps"] = ci.steps;
        cj["success"] = ds.clips[c].success;
        clips.push_back(std::move(cj));
    }
    m["clips"] = std::move(clips);
    json proj = json::array();
    for (std::size_t i = 0; i < ds.projection.m.rows; ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < ds.projection.m.cols; ++j) row.push_back(ds.projection.m.at(i, j));
        proj.push_back(std::move(row));
    }
    m["projection"] = std::move(proj);
    std::ofstream out(fs::path(dir) / "manifest.json");
    if (!out) throw DataError("write_dataset: cannot open " + dir + "/manifest.json");
    out << m.dump(1) << "\n";
}

Dataset load_dataset(const std::string& dir) {
    std::ifstream mf(fs::path(dir) / "manifest.json");
    if (!mf) throw DataError("load_dataset: missing " + dir + "/manifest.json");
    json m = json::parse(mf);
    Dataset ds;
    ds.master_seed = m.at("master_seed").get<uint64_t>();
    const json& proj = m.at("projection");
    ds.projection.m = Tensor2(proj.size(), proj[0].size());
    for (std::size_t i = 0; i < ds.projection.m.rows; ++i)
        for (std::size_t j = 0; j < ds.projection.m.cols; ++j)
            ds.projection.m.at(i, j) = proj[i][j].get<double>();
    for (const auto& cj : m.at("clips")) {
        ClipInfo ci;
        ci.kind = ScenarioKind(cj.at("kind").get<int>());
        ci.seed = cj.at("seed").get<uint64_t>();
        ci.val = cj.at("split").get<std::string>() == "val";
        ci.steps = cj.at("steps").get<int>();
        ds.info.push_back(ci);
        EpisodeRecord ep;
        ep.kind = ci.kind;
        ep.seed = ci.seed;
        ep.success = cj.value("success", false);
        ds.clips.push_back(std::move(ep));
    }

    std::ifstream df(fs::path(dir) / "data.jsonl");
    if (!df) throw DataError("load_dataset: missing " + dir + "/data.jsonl");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(df, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j = json::parse(line);
        int clip = j.at("clip").get<int>();
        if (clip < 0 || clip >= int(ds.clips.size()))
            throw DataError("load_dataset: clip index out of range at line " +
                            std::to_string(lineno));
        if (j.at("scenario_id").get<int>() != int(ds.clips[clip].kind))
            throw DataError("load_dataset: scenario_id mismatch at line " + std::to_string(lineno));
        ds.clips[clip].steps.push_back(record_from_json(j));
    }
    for (int c = 0; c < int(ds.clips.size()); ++c) {
        if (int(ds.clips[c].steps.size()) != ds.info[c].steps)
            throw DataError("load_dataset: clip " + std::to_string(c) +
                            " has wrong step count (data/manifest mismatch)");
        if (ds.clips[c].steps.empty())
            throw DataError("load_dataset: clip " + std::to_string(c) + " is empty");
    }
    return ds;
}

std::string hash_bytes(const std::string& bytes) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)h);
    return buf;
}

std::string hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("hash_file: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return hash_bytes(ss.str());
}

std::string dataset_manifest_hash(const std::string& dir) {
    return hash_file((fs::path(dir) / "manifest.json").string());
}

} // namespace moedrive
