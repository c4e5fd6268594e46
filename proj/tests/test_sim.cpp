#include <doctest.h>

#include <cmath>

#include "moedrive/oracle.hpp"
#include "moedrive/rng.hpp"
#include "moedrive/sim.hpp"

using namespace moedrive;
using namespace moedrive::simconf;

TEST_CASE("spawn_scenario is deterministic per (kind, seed)") {
    for (int k = 0; k < kNumScenarios; ++k) {
        WorldState a = spawn_scenario(ScenarioKind(k), 7);
        WorldState b = spawn_scenario(ScenarioKind(k), 7);
        CHECK(a.x == b.x);
        CHECK(a.v == b.v);
        CHECK(a.goal_x == b.goal_x);
        CHECK(a.lane_end_x == b.lane_end_x);
        CHECK(a.agents.size() == b.agents.size());
        for (std::size_t i = 0; i < a.agents.size(); ++i) {
            CHECK(a.agents[i].x == b.agents[i].x);
            CHECK(a.agents[i].v == b.agents[i].v);
        }
        WorldState c = spawn_scenario(ScenarioKind(k), 8);
        CHECK(a.goal_x != c.goal_x); // different seed actually varies geometry
    }
}

TEST_CASE("merging spawns exactly one gap within the configured bounds") {
    for (uint64_t seed = 0; seed < 100; ++seed) {
        WorldState w = spawn_scenario(ScenarioKind::Merging, seed);
        REQUIRE(w.agents.size() == 4);
        int wide = 0;
        for (std::size_t i = 1; i < w.agents.size(); ++i) {
            double spacing = w.agents[i - 1].x - w.agents[i].x;
            if (spacing >= 18.0 && spacing <= 26.0) {
                ++wide;
            } else {
                CHECK(spacing >= 9.0);
                CHECK(spacing <= 13.0);
            }
        }
        CHECK(wide == 1);
        CHECK(w.gap_len >= 18.0);
        CHECK(w.gap_len <= 26.0);
        double actual = w.agents[w.gap_front_agent].x - w.agents[w.gap_rear_agent].x;
        CHECK(actual == doctest::Approx(w.gap_len));
    }
}

TEST_CASE("emergency-brake trigger distances are roughly uniform (chi-square)") {
    // trigger_x ~ U[15, 30]; 1000 seeds over 10 bins, chi2 99.9% df9 = 27.88
    std::array<int, 10> bins{};
    for (uint64_t seed = 0; seed < 1000; ++seed) {
        WorldState w = spawn_scenario(ScenarioKind::EmergencyBrake, seed);
        REQUIRE(w.trigger_x >= 15.0);
        REQUIRE(w.trigger_x < 30.0);
        int b = int((w.trigger_x - 15.0) / 1.5);
        ++bins[std::min(b, 9)];
    }
    double chi2 = 0;
    for (int c : bins) chi2 += (c - 100.0) * (c - 100.0) / 100.0;
    CHECK(chi2 < 27.88);
}

TEST_CASE("step: zero controls at rest leave position unchanged") {
    WorldState w = spawn_scenario(ScenarioKind::TrafficSign, 1);
    w.v = 0;
    double x0 = w.x, y0 = w.y;
    for (int i = 0; i < 20; ++i) step(w, ControlCommand{0, 0, 0});
    CHECK(w.x == x0);
    CHECK(w.y == y0);
}

TEST_CASE("step: throttle and brake both apply") {
    WorldState w = spawn_scenario(ScenarioKind::TrafficSign, 1);
    w.v = 5.0;
    step(w, ControlCommand{1, 1, 0});
    // accel = a_max - b_max - drag v
    double expect = 5.0 + (kAccelMax - kBrakeMax - kDrag * 5.0) * kDt;
    CHECK(w.v == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("step: full-throttle speed matches the closed-form accel ODE within 1%") {
    WorldState w = spawn_scenario(ScenarioKind::TrafficSign, 1);
    w.v = 0;
    w.stop_line_x = kNone; // plain straight road
    w.goal_x = 1e6;
    for (int i = 0; i < 40; ++i) step(w, ControlCommand{1, 0, 0});
    double analytic = (kAccelMax / kDrag) * (1.0 - std::exp(-kDrag * 2.0));
    CHECK(w.v == doctest::Approx(analytic).epsilon(0.01));
}

TEST_CASE("step: non-finite control is a hard error, speed never negative") {
    WorldState w = spawn_scenario(ScenarioKind::Merging, 3);
    CHECK_THROWS(step(w, ControlCommand{std::nan(""), 0, 0}));
    for (int i = 0; i < 100; ++i) {
        step(w, ControlCommand{0, 1, 0.3});
        CHECK(w.v >= 0.0);
        CHECK(std::isfinite(w.x));
        CHECK(std::isfinite(w.y));
    }
}

TEST_CASE("oracle controls: stop line hold and free-road throttle") {
    WorldState w = spawn_scenario(ScenarioKind::TrafficSign, 5);
    w.x = w.stop_line_x - kCarHalfLen - 0.5; // right at the line
    w.v = 0;
    ControlCommand c = oracle_controls(w);
    CHECK(c.throttle == 0.0);
    CHECK(c.brake > 0.0);
    CHECK(c.steer == 0.0);

    WorldState f = spawn_scenario(ScenarioKind::Overtaking, 5);
    f.v = 2.0; // below cruise on a free stretch
    ControlCommand cf = oracle_controls(f);
    CHECK(cf.throttle > 0.0);
    CHECK(cf.brake == 0.0);
}

TEST_CASE("rollout_oracle: record cadence, determinism, value recursion") {
    TeacherProjection proj = TeacherProjection::from_seed(11);
    EpisodeRecord ep = rollout_oracle(ScenarioKind::EmergencyBrake, 21, 30.0, proj);
    REQUIRE(!ep.steps.empty());
    CHECK(ep.steps.size() <= std::size_t(30.0 * 2));
    for (std::size_t i = 0; i < ep.steps.size(); ++i)
        CHECK(ep.steps[i].t == doctest::Approx(0.5 * i).epsilon(1e-9));

    EpisodeRecord ep2 = rollout_oracle(ScenarioKind::EmergencyBrake, 21, 30.0, proj);
    REQUIRE(ep2.steps.size() == ep.steps.size());
    for (std::size_t i = 0; i < ep.steps.size(); ++i) {
        CHECK(ep.steps[i].oracle.value == ep2.steps[i].oracle.value);
        CHECK(ep.steps[i].oracle.reward == ep2.steps[i].oracle.reward);
        CHECK(ep.steps[i].obs.speed == ep2.steps[i].obs.speed);
    }

    // value_t = reward_t + gamma value_{t+1}, terminal 0, exactly
    double next = 0.0;
    for (auto it = ep.steps.rbegin(); it != ep.steps.rend(); ++it) {
        CHECK(it->oracle.value == it->oracle.reward + kGamma * next);
        next = it->oracle.value;
    }

    // short horizon forces a timeout and caps the record count
    EpisodeRecord short_ep = rollout_oracle(ScenarioKind::Merging, 3, 5.0, proj);
    CHECK(short_ep.steps.size() <= std::size_t(5.0 * 2));
    CHECK(short_ep.timeout);
}

TEST_CASE("oracle waypoints equal the realized future poses") {
    TeacherProjection proj = TeacherProjection::from_seed(11);
    for (int k = 0; k < kNumScenarios; ++k) {
        EpisodeRecord ep = rollout_oracle(ScenarioKind(k), 33, 30.0, proj);
        // replay to capture the realized pose track at 2 Hz
        WorldState w = spawn_scenario(ScenarioKind(k), 33);
        std::vector<std::array<double, 3>> poses;
        int phys = 0;
        while (!w.done) {
            if (phys % kRecordEvery == 0) poses.push_back({w.x, w.y, w.heading});
            step(w, oracle_controls(w));
            ++phys;
        }
        REQUIRE(poses.size() == ep.steps.size());
        for (std::size_t i = 0; i + kWaypointCount < poses.size(); ++i) {
            for (int j = 0; j < kWaypointCount; ++j) {
                Vec2 expect = to_ego_frame(poses[i][0], poses[i][1], poses[i][2],
                                           poses[i + 1 + j][0], poses[i + 1 + j][1]);
                CHECK(ep.steps[i].oracle.waypoints[j].x ==
                      doctest::Approx(expect.x).epsilon(1e-9));
                CHECK(ep.steps[i].oracle.waypoints[j].y ==
                      doctest::Approx(expect.y).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("observation raster: forward-facing, binary, scenario cues present") {
    WorldState gw = spawn_scenario(ScenarioKind::GiveWay, 17);
    Observation obs = observe(gw);
    obs.validate();
    double agent_mass = 0;
    for (int r = 0; r < Observation::kRows; ++r)
        for (int c = 0; c < Observation::kCols; ++c)
            agent_mass += obs.grid[Observation::index(1, r, c)];
    CHECK(agent_mass == 0.0); // the rear car must be invisible

    WorldState ts = spawn_scenario(ScenarioKind::TrafficSign, 17);
    Observation tso = observe(ts);
    double sign_mass = 0, drivable = 0;
    for (int r = 0; r < Observation::kRows; ++r)
        for (int c = 0; c < Observation::kCols; ++c) {
            sign_mass += tso.grid[Observation::index(2, r, c)];
            drivable += tso.grid[Observation::index(0, r, c)];
        }
    CHECK(sign_mass > 0.0);
    CHECK(drivable > 0.0);
    for (double v : tso.grid) CHECK((v == 0.0 || v == 1.0));

    WorldState ob = spawn_scenario(ScenarioKind::Overtaking, 17);
    Observation obo = observe(ob);
    double obstacle = 0;
    for (int i = Observation::kRows * Observation::kCols; i < 2 * Observation::kRows * Observation::kCols; ++i)
        obstacle += obo.grid[i];
    CHECK(obstacle > 0.0); // static car ahead is visible

    CHECK(obs.command == int(Command::ChangeLeft));
    CHECK(tso.command == int(Command::Follow));
}

TEST_CASE("privileged states are linearly separable by scenario kind") {
    // multinomial logistic probe trained on oracle-visited states
    std::vector<Tensor1> xs;
    std::vector<int> ys;
    for (int k = 0; k < kNumScenarios; ++k) {
        for (uint64_t seed = 0; seed < 12; ++seed) {
            WorldState w = spawn_scenario(ScenarioKind(k), 1000 + seed);
            int phys = 0;
            while (!w.done) {
                if (phys % kRecordEvery == 0) {
                    xs.push_back(privileged_state(w));
                    ys.push_back(k);
                }
                step(w, oracle_controls(w));
                ++phys;
            }
        }
    }
    const int D = kPrivStateDim, C = kNumScenarios;
    std::vector<double> W(std::size_t(C) * (D + 1), 0.0);
    for (int iter = 0; iter < 400; ++iter) {
        std::vector<double> grad(W.size(), 0.0);
        for (std::size_t n = 0; n < xs.size(); ++n) {
            std::array<double, kNumScenarios> logit{};
            for (int c = 0; c < C; ++c) {
                double z = W[std::size_t(c) * (D + 1) + D];
                for (int d = 0; d < D; ++d) z += W[std::size_t(c) * (D + 1) + d] * xs[n][d];
                logit[c] = z;
            }
            double mx = *std::max_element(logit.begin(), logit.end());
            double sum = 0;
            for (int c = 0; c < C; ++c) sum += std::exp(logit[c] - mx);
            for (int c = 0; c < C; ++c) {
                double p = std::exp(logit[c] - mx) / sum;
                double err = p - (c == ys[n] ? 1.0 : 0.0);
                for (int d = 0; d < D; ++d)
                    grad[std::size_t(c) * (D + 1) + d] += err * xs[n][d];
                grad[std::size_t(c) * (D + 1) + D] += err;
            }
        }
        for (std::size_t i = 0; i < W.size(); ++i) W[i] -= 2.0 / double(xs.size()) * grad[i];
    }
    int correct = 0;
    for (std::size_t n = 0; n < xs.size(); ++n) {
        int best = 0;
        double bz = -1e300;
        for (int c = 0; c < C; ++c) {
            double z = W[std::size_t(c) * (D + 1) + D];
            for (int d = 0; d < D; ++d) z += W[std::size_t(c) * (D + 1) + d] * xs[n][d];
            if (z > bz) {
                bz = z;
                best = c;
            }
        }
        correct += best == ys[n];
    }
    double acc = double(correct) / double(xs.size());
    CHECK(acc >= 0.99);
}

TEST_CASE("oracle competence (fast check, fuller sweep in acceptance)") {
    TeacherProjection proj = TeacherProjection::from_seed(2);
    for (int k = 0; k < kNumScenarios; ++k) {
        int succ = 0;
        const int n = 50;
        for (uint64_t s = 0; s < n; ++s)
            succ += rollout_oracle(ScenarioKind(k), 5000 + s, 30.0, proj).success;
        CHECK(succ >= int(0.95 * n));
    }
}
