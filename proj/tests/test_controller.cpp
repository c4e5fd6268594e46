#include <doctest.h>

#include <cmath>

#include "moedrive/controller.hpp"

using namespace moedrive;

TEST_CASE("pid_step: zero error, first-call value, derivative kick-free reset") {
    PidState pid = make_longitudinal_pid();
    for (int i = 0; i < 5; ++i) CHECK(pid_step(pid, 0.0, 0.05) == 0.0);

    pid.reset();
    // kp e + ki (e dt) + kd * 0 = 5 + 0.5*0.05
    CHECK(pid_step(pid, 1.0, 0.05) == doctest::Approx(5.025).epsilon(1e-12));

    pid.reset();
    CHECK(pid.first);
    double out1 = pid_step(pid, 2.0, 0.05); // derivative must be zero again
    CHECK(out1 == doctest::Approx(2.0 * 5.0 + 0.5 * 2.0 * 0.05).epsilon(1e-12));

    CHECK_THROWS(pid_step(pid, 1.0, 0.0));
}

TEST_CASE("pid_step: integral grows linearly until the clamp") {
    PidState pid{1.0, 1.0, 0.0, 0.5}; // clamp at 0.5
    double prev_integral = 0;
    for (int i = 0; i < 30; ++i) {
        pid_step(pid, 1.0, 0.05);
        if (pid.integral < 0.5)
            CHECK(pid.integral == doctest::Approx(prev_integral + 0.05).epsilon(1e-12));
        prev_integral = pid.integral;
    }
    CHECK(pid.integral == 0.5);
}

TEST_CASE("longitudinal: stationary plan brakes, matched speed coasts, eager plan saturates") {
    std::array<Vec2, kWaypointCount> stationary{{{0, 0}, {0, 0}, {0, 0}, {0, 0}}};
    PidState pid = make_longitudinal_pid();
    auto [thr, brk] = longitudinal(stationary, 5.0, pid, 0.05);
    CHECK(thr == 0.0);
    CHECK(brk > 0.0);

    // desired speed = mean spacing * 2 Hz = 2.5 * 2 = 5
    std::array<Vec2, kWaypointCount> cruise{{{2.5, 0}, {5, 0}, {7.5, 0}, {10, 0}}};
    pid.reset();
    auto [thr2, brk2] = longitudinal(cruise, 5.0, pid, 0.05);
    CHECK(thr2 == 0.0);
    CHECK(brk2 == 0.0); // inside the deadband

    pid.reset();
    auto [thr3, brk3] = longitudinal(cruise, 0.0, pid, 0.05);
    CHECK(thr3 == 1.0); // saturated
    CHECK(brk3 == 0.0);
}

TEST_CASE("lateral: straight plan, 45-degree aim value, antisymmetry, clamping") {
    std::array<Vec2, kWaypointCount> straight{{{2, 0}, {4, 0}, {6, 0}, {8, 0}}};
    PidState pid = make_lateral_pid();
    CHECK(lateral(straight, pid, 0.05) == 0.0);

    // aim midpoint of w1, w2 at 45 degrees left
    std::array<Vec2, kWaypointCount> left45{{{1, 1}, {3, 3}, {5, 5}, {7, 7}}};
    pid.reset();
    double s = lateral(left45, pid, 0.05);
    double e = std::atan2(2.0, 2.0);
    CHECK(s == doctest::Approx(0.75 * e + 0.75 * e * 0.05).epsilon(1e-12));
    CHECK(s == doctest::Approx(0.6185).epsilon(1e-3));

    // reflection across the x-axis negates the command exactly
    PidState pa = make_lateral_pid(), pb = make_lateral_pid();
    std::array<Vec2, kWaypointCount> wps{{{1.2, 0.4}, {2.9, 1.1}, {4.0, 1.9}, {5.1, 2.2}}};
    std::array<Vec2, kWaypointCount> mirrored;
    for (int i = 0; i < kWaypointCount; ++i) mirrored[i] = {wps[i].x, -wps[i].y};
    for (int step = 0; step < 10; ++step)
        CHECK(lateral(wps, pa, 0.05) == doctest::Approx(-lateral(mirrored, pb, 0.05)).epsilon(1e-12));

    // hard-left plan saturates within [-1, 1]
    std::array<Vec2, kWaypointCount> hard{{{0.1, 5}, {0.1, 10}, {0.1, 15}, {0.1, 20}}};
    PidState pc = make_lateral_pid();
    double sat = lateral(hard, pc, 0.05);
    CHECK(sat <= 1.0);
    CHECK(sat >= 0.9);

    // degenerate aim point guard
    std::array<Vec2, kWaypointCount> degenerate{{{0, 0}, {0, 0}, {3, 1}, {4, 1}}};
    PidState pd = make_lateral_pid();
    CHECK(lateral(degenerate, pd, 0.05) == 0.0);
}

TEST_CASE("outputs stay in range for outrageous plans") {
    std::array<Vec2, kWaypointCount> wild{{{1e6, -1e6}, {-1e6, 1e6}, {1e6, 1e6}, {-1e6, -1e6}}};
    PidState lon = make_longitudinal_pid(), lat_pid = make_lateral_pid();
    auto [thr, brk] = longitudinal(wild, 0.0, lon, 0.05);
    CHECK(thr >= 0.0);
    CHECK(thr <= 1.0);
    CHECK(brk >= 0.0);
    CHECK(brk <= 1.0);
    double s = lateral(wild, lat_pid, 0.05);
    CHECK(s >= -1.0);
    CHECK(s <= 1.0);
}
