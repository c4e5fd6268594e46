#include <doctest.h>

#include <cstdio>

#include "moedrive/dataset.hpp"
#include "moedrive/model.hpp"

using namespace moedrive;

namespace {

void zero_params(Model& m) {
    for (Param& p : m.params) std::fill(p.value.begin(), p.value.end(), 0.0);
}

Observation blank_obs() {
    Observation obs;
    obs.grid.assign(Observation::kGridSize, 0.0);
    obs.speed = 0;
    obs.command = 0;
    obs.goal_x = obs.goal_y = 0;
    return obs;
}

std::string vec_hash(const Tensor1& v) {
    std::string s;
    char buf[40];
    for (double x : v) {
        std::snprintf(buf, sizeof buf, "%.10g;", x);
        s += buf;
    }
    return hash_bytes(s);
}

} // namespace

TEST_CASE("image encoder: zero weights map the zero grid to the zero vector") {
    Model m(1);
    zero_params(m);
    Tensor1 f = m.image_feature(blank_obs());
    REQUIRE(f.size() == std::size_t(dims::kImgFeat));
    for (double v : f) CHECK(v == 0.0);
}

TEST_CASE("image encoder: output length 128 and batch consistency") {
    Model m(3);
    WorldState w = spawn_scenario(ScenarioKind::Merging, 5);
    Observation a = observe(w);
    step(w, ControlCommand{0.5, 0, 0.1});
    Observation b = observe(w);

    Tensor1 fa = m.image_feature(a), fb = m.image_feature(b);
    CHECK(fa.size() == std::size_t(dims::kImgFeat));

    // batch-of-2 equals two batch-of-1 runs
    ImageEncoder::Cache cache;
    m.image_encoder.forward({&a, &b}, cache);
    Tensor1 ba = m.image_encoder.feature_of(cache, 0);
    Tensor1 bb = m.image_encoder.feature_of(cache, 1);
    for (std::size_t i = 0; i < fa.size(); ++i) {
        CHECK(ba[i] == doctest::Approx(fa[i]).epsilon(1e-12));
        CHECK(bb[i] == doctest::Approx(fb[i]).epsilon(1e-12));
    }
}

TEST_CASE("image encoder: golden regression output for a pinned seed") {
    Model m(12345);
    WorldState w = spawn_scenario(ScenarioKind::TrafficSign, 99);
    Observation obs = observe(w);
    Tensor1 f = m.image_feature(obs);
    CHECK(f[0] == doctest::Approx(-0.06897941573).epsilon(1e-9));
    CHECK(vec_hash(f) == "13976aa3eb1ef476");
    CHECK(vec_hash(m.fused_feature(obs)) == "061cc1ce19534792");
}

TEST_CASE("image encoder rejects malformed grids") {
    Model m(1);
    Observation obs = blank_obs();
    obs.grid.resize(100);
    CHECK_THROWS(m.image_feature(obs));
    obs = blank_obs();
    obs.grid[5] = 1.5;
    CHECK_THROWS(m.image_feature(obs));
}

TEST_CASE("measurement encoder: zero weights, shape, one-hot enforcement") {
    Model m(2);
    Tape t;
    Tensor1 onehot{0, 0, 0, 0, 1, 0};
    auto node = m.measurement_feature(t, 6.0, onehot, 20.0, -3.0);
    CHECK(t.value(node).size() == std::size_t(dims::kMeasFeat));

    zero_params(m);
    Tape t2;
    auto z = m.measurement_feature(t2, 6.0, onehot, 20.0, -3.0);
    for (double v : t2.value(z)) CHECK(v == 0.0);

    Tape t3;
    CHECK_THROWS(m.measurement_feature(t3, 6.0, Tensor1{1, 0, 0, 0, 1, 0}, 0, 0));
    CHECK_THROWS(m.measurement_feature(t3, 6.0, Tensor1{0, 0, 0, 0, 0, 0}, 0, 0));
    CHECK_THROWS(m.measurement_feature(t3, 6.0, Tensor1{0.5, 0.5, 0, 0, 0, 0}, 0, 0));
}

TEST_CASE("fuse: concatenation order, length, and mismatch errors") {
    Model m(2);
    Tape t;
    auto a = t.input(Tensor1(dims::kImgFeat, 0.0));
    auto b = t.input(Tensor1(dims::kMeasFeat, 1.0));
    auto f = m.fuse(t, a, b);
    const Tensor1& v = t.value(f);
    REQUIRE(v.size() == std::size_t(dims::kFused));
    for (int i = 0; i < dims::kImgFeat; ++i) CHECK(v[i] == 0.0);
    for (int i = dims::kImgFeat; i < dims::kFused; ++i) CHECK(v[i] == 1.0);

    auto bad = t.input(Tensor1(7, 0.0));
    CHECK_THROWS(m.fuse(t, a, bad));
    CHECK_THROWS(m.fuse(t, bad, b));
}
