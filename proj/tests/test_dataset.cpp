#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "moedrive/dataset.hpp"
#include "moedrive/errors.hpp"

using namespace moedrive;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TmpDir {
    fs::path path;
    explicit TmpDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TmpDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("dataset split is exhaustive, disjoint, and close to 95/5") {
    Dataset ds = generate_dataset({50, 50, 50, 50, 50}, 7);
    REQUIRE(ds.clips.size() == 250);
    int train = 0, val = 0;
    std::array<int, kNumScenarios> val_per_kind{};
    for (const auto& info : ds.info) {
        (info.val ? val : train) += 1;
        if (info.val) ++val_per_kind[int(info.kind)];
    }
    CHECK(train == 237);
    CHECK(val == 13);
    for (int k = 0; k < kNumScenarios; ++k) CHECK(val_per_kind[k] >= 2);

    // every step lands in exactly one split
    std::size_t total_steps = 0;
    for (const auto& clip : ds.clips) total_steps += clip.steps.size();
    CHECK(ds.samples(false).size() + ds.samples(true).size() == total_steps);
}

TEST_CASE("dataset write/load round-trip preserves the record contents") {
    TmpDir dir("md_ds_roundtrip");
    Dataset ds = generate_dataset({3, 3, 3, 3, 3}, 21);
    write_dataset(ds, dir.path.string());
    Dataset back = load_dataset(dir.path.string());

    REQUIRE(back.clips.size() == ds.clips.size());
    for (std::size_t c = 0; c < ds.clips.size(); ++c) {
        REQUIRE(back.clips[c].steps.size() == ds.clips[c].steps.size());
        CHECK(back.info[c].seed == ds.info[c].seed);
        CHECK(back.info[c].val == ds.info[c].val);
        for (std::size_t s = 0; s < ds.clips[c].steps.size(); ++s) {
            const StepRecord& a = ds.clips[c].steps[s];
            const StepRecord& b = back.clips[c].steps[s];
            CHECK(a.obs.grid == b.obs.grid);
            CHECK(a.obs.speed == b.obs.speed);
            CHECK(a.obs.command == b.obs.command);
            CHECK(a.oracle.value == b.oracle.value);
            CHECK(a.oracle.reward == b.oracle.reward);
            CHECK(a.oracle.teacher_feature == b.oracle.teacher_feature);
            for (int k = 0; k < kWaypointCount; ++k) {
                CHECK(a.oracle.waypoints[k].x == b.oracle.waypoints[k].x);
                CHECK(a.oracle.waypoints[k].y == b.oracle.waypoints[k].y);
            }
        }
    }
    for (std::size_t i = 0; i < ds.projection.m.d.size(); ++i)
        CHECK(back.projection.m.d[i] == ds.projection.m.d[i]);
}

TEST_CASE("dataset generation and serialization are byte-deterministic") {
    TmpDir a("md_ds_det_a"), b("md_ds_det_b");
    write_dataset(generate_dataset({2, 2, 2, 2, 2}, 77), a.path.string());
    write_dataset(generate_dataset({2, 2, 2, 2, 2}, 77), b.path.string());
    CHECK(slurp(a.path / "data.jsonl") == slurp(b.path / "data.jsonl"));
    CHECK(slurp(a.path / "manifest.json") == slurp(b.path / "manifest.json"));
    CHECK(dataset_manifest_hash(a.path.string()) == dataset_manifest_hash(b.path.string()));

    TmpDir c("md_ds_det_c");
    write_dataset(generate_dataset({2, 2, 2, 2, 2}, 78), c.path.string());
    CHECK(slurp(a.path / "data.jsonl") != slurp(c.path / "data.jsonl"));
}

TEST_CASE("dataset loader rejects corrupted inputs") {
    CHECK_THROWS_AS(load_dataset("/nonexistent/dir"), DataError);
    CHECK_THROWS_AS(generate_dataset({1, 1}, 3), DataError);
    CHECK_THROWS_AS(generate_dataset({0, 0, 0, 0, 0}, 3), DataError);

    TmpDir dir("md_ds_corrupt");
    Dataset ds = generate_dataset({1, 1, 1, 1, 1}, 5);
    write_dataset(ds, dir.path.string());
    // truncate the data file: step counts no longer match the manifest
    {
        std::string all = slurp(dir.path / "data.jsonl");
        std::string cut = all.substr(0, all.find('\n', all.size() / 2));
        std::ofstream out(dir.path / "data.jsonl", std::ios::trunc);
        out << cut << "\n";
    }
    CHECK_THROWS_AS(load_dataset(dir.path.string()), DataError);
}

TEST_CASE("fnv hashing is stable and input-sensitive") {
    CHECK(hash_bytes("") == "cbf29ce484222325");
    CHECK(hash_bytes("a") != hash_bytes("b"));
    CHECK(hash_bytes("moedrive") == hash_bytes("moedrive"));
}
