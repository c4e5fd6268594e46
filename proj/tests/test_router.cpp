#include <doctest.h>

#include <cmath>

#include "moedrive/model.hpp"
#include "moedrive/rng.hpp"
#include "moedrive/router.hpp"

using namespace moedrive;

TEST_CASE("normalized_entropy: exact anchor values") {
    CHECK(normalized_entropy({1, 0, 0, 0, 0}) == 0.0);
    CHECK(std::abs(normalized_entropy({0.2, 0.2, 0.2, 0.2, 0.2}) - 1.0) <= 1e-12);
    double expect = std::log(2.0) / std::log(5.0);
    CHECK(std::abs(normalized_entropy({0.5, 0.5, 0, 0, 0}) - expect) <= 1e-12);
}

TEST_CASE("normalized_entropy: input validation and permutation invariance") {
    CHECK_THROWS(normalized_entropy({0.5, 0.6, 0, 0, 0}));
    CHECK_THROWS(normalized_entropy({-0.1, 1.1, 0, 0, 0}));
    CHECK_THROWS(normalized_entropy({}));
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        Tensor1 p(5);
        double sum = 0;
        for (double& v : p) {
            v = rng.uniform(0.0, 1.0);
            sum += v;
        }
        for (double& v : p) v /= sum;
        double u = normalized_entropy(p);
        CHECK(u >= 0.0);
        CHECK(u <= 1.0);
        Tensor1 rev(p.rbegin(), p.rend());
        CHECK(normalized_entropy(rev) == doctest::Approx(u).epsilon(1e-13));
        // u = 1 only at exact uniformity, u = 0 only at a one-hot
        CHECK(u < 1.0);
        CHECK(u > 0.0);
    }
}

TEST_CASE("select: threshold rule, argmax, ties to the lowest index") {
    RouterDistribution uncertain{{0.3, 0.25, 0.2, 0.15, 0.1}, 0.6};
    RoutingDecision d = select(uncertain, 0.5);
    CHECK(d.global);
    CHECK(d.selected_expert() == 0);

    RouterDistribution confident{{0.05, 0.8, 0.05, 0.05, 0.05}, 0.3};
    d = select(confident, 0.5);
    CHECK(!d.global);
    CHECK(d.kind == ScenarioKind::Overtaking);
    CHECK(d.selected_expert() == 2);

    RouterDistribution tie{{0.4, 0.4, 0.1, 0.05, 0.05}, 0.4};
    d = select(tie, 0.5);
    CHECK(!d.global);
    CHECK(d.kind == ScenarioKind::Merging);

    CHECK_THROWS(select(confident, 1.5));
}

TEST_CASE("select: tau boundaries and monotone coupling") {
    Rng rng(7);
    Model m(21);
    for (int trial = 0; trial < 200; ++trial) {
        Tensor1 fused(dims::kFused);
        for (double& v : fused) v = rng.uniform(-1.0, 1.0);
        RouterDistribution dist = make_distribution(m.router_probs(fused));
        CHECK(select(dist, 0.0).global); // U >= 0 always

        // raising tau can only flip global -> scene, never back
        bool was_scene = false;
        for (double tau = 0.0; tau <= 1.0 + 1e-12; tau += 0.05) {
            bool scene = !select(dist, std::min(tau, 1.0)).global;
            if (was_scene) CHECK(scene);
            was_scene = scene;
        }
    }
}

TEST_CASE("select is scale-free: shifting all logits changes nothing") {
    Model m(5);
    Rng rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        Tensor1 logits(kNumScenarios);
        for (double& v : logits) v = rng.uniform(-3.0, 3.0);
        Tensor1 shifted = logits;
        for (double& v : shifted) v += 11.7;
        Tape t;
        Tensor1 p1 = t.value(t.softmax_op(t.input(logits)));
        Tensor1 p2 = t.value(t.softmax_op(t.input(shifted)));
        RoutingDecision d1 = select(make_distribution(p1), 0.5);
        RoutingDecision d2 = select(make_distribution(p2), 0.5);
        CHECK(d1.global == d2.global);
        CHECK(d1.selected_expert() == d2.selected_expert());
    }
}

TEST_CASE("scenario_loss: exact values and clamping") {
    CHECK(scenario_loss({0, 1, 0, 0, 0}, ScenarioKind::Overtaking) == 0.0);
    double ln5 = std::log(5.0);
    CHECK(scenario_loss({0.2, 0.2, 0.2, 0.2, 0.2}, ScenarioKind::GiveWay) ==
          doctest::Approx(ln5).epsilon(1e-12));
    double e2 = std::exp(-2.0);
    Tensor1 p{e2, 1.0 - e2, 0, 0, 0};
    CHECK(scenario_loss(p, ScenarioKind::Merging) == doctest::Approx(2.0).epsilon(1e-12));
    // exact zero probability hits the 1e-12 clamp instead of inf
    CHECK(scenario_loss({0, 1, 0, 0, 0}, ScenarioKind::Merging) ==
          doctest::Approx(-std::log(1e-12)).epsilon(1e-9));
}

TEST_CASE("route_logits: shape and zero-parameter output") {
    Model m(6);
    Tensor1 fused(dims::kFused, 0.4);
    Tape t;
    auto logits = m.router_logits(t, t.input(fused));
    CHECK(t.value(logits).size() == std::size_t(kNumScenarios));
    for (Param& p : m.params) std::fill(p.value.begin(), p.value.end(), 0.0);
    Tape t2;
    auto z = m.router_logits(t2, t2.input(fused));
    for (double v : t2.value(z)) CHECK(v == 0.0);
    // zero logits -> uniform probs -> maximum uncertainty
    CHECK(normalized_entropy(m.router_probs(fused)) == doctest::Approx(1.0).epsilon(1e-12));
}
