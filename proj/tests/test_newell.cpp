#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "lcimpact/newell.hpp"

using namespace lcimpact;

namespace {

// leader with speed 20 + 2 sin(w t): positions are the exact integral, so the
// trajectory has real speed variation and the pair fit is well conditioned
VehicleTrack sine_leader(const std::string& id, double x0, double t0, double t1, double w = 0.25) {
    VehicleTrack tr;
    tr.vehicle_id = id;
    int n = static_cast<int>(std::llround((t1 - t0) / 0.1));
    for (int i = 0; i <= n; ++i) {
        TrajectoryPoint p;
        p.t = t0 + 0.1 * i;
        p.x = x0 + 20.0 * (p.t - t0) - (2.0 / w) * std::cos(w * (p.t - t0)) + 2.0 / w;
        p.speed = 20.0 + 2.0 * std::sin(w * (p.t - t0));
        p.lane_id = 1;
        tr.points.push_back(p);
    }
    return tr;
}

// follower positions generated from the leader with the given parameters
VehicleTrack shadow(const VehicleTrack& leader, const std::string& id, double tau, double d,
                    double t0, double t1) {
    std::vector<double> times;
    for (double t = t0; t <= t1 + 1e-9; t += 0.1) times.push_back(t);
    auto xs = simulate_newell(leader, tau, d, times);
    VehicleTrack tr;
    tr.vehicle_id = id;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (std::isnan(xs[i])) continue;
        TrajectoryPoint p;
        p.t = times[i];
        p.x = xs[i];
        p.lane_id = 1;
        tr.points.push_back(p);
    }
    return tr;
}

}  // namespace

TEST_CASE("simulation shifts a constant-speed leader by v tau + d") {
    VehicleTrack leader;
    leader.vehicle_id = "l";
    for (int i = 0; i <= 1000; ++i) {
        TrajectoryPoint p;
        p.t = 0.1 * i;
        p.x = 20.0 * p.t;
        p.lane_id = 1;
        leader.points.push_back(p);
    }
    std::vector<double> times{5.0, 50.0, 0.5};
    auto xs = simulate_newell(leader, 1.0, 5.0, times);
    CHECK(xs[0] == doctest::Approx(20.0 * 5.0 - 25.0).epsilon(1e-12));
    CHECK(xs[1] == doctest::Approx(20.0 * 50.0 - 25.0).epsilon(1e-12));
    CHECK(std::isnan(xs[2]));  // leader has no coverage at t - tau
}

TEST_CASE("simulated follower speed is the leader speed delayed by tau") {
    VehicleTrack leader = sine_leader("l", 0.0, 0.0, 100.0, 0.5);
    double tau = 1.5, d = 5.0;
    std::vector<double> times;
    for (double t = 2.0; t <= 99.0 + 1e-9; t += 0.1) times.push_back(t);
    auto xs = simulate_newell(leader, tau, d, times);
    for (std::size_t i = 1; i + 1 < times.size(); i += 37) {
        double fdiff = (xs[i + 1] - xs[i - 1]) / 0.2;
        double expected = 20.0 + 2.0 * std::sin(0.5 * (times[i] - tau));
        CHECK(std::abs(fdiff - expected) < 0.01);
    }
}

TEST_CASE("calibration recovers the generating parameters exactly") {
    VehicleTrack leader = sine_leader("l", 100.0, 0.0, 120.0);
    VehicleTrack follower = shadow(leader, "f", 1.2, 6.0, 2.0, 120.0);
    NewellParams p = calibrate_newell(follower, leader, 0.0, 120.0);
    CHECK(p.flag == NewellParams::Flag::ok);
    CHECK(std::abs(p.tau - 1.2) <= 0.05);
    CHECK(std::abs(p.d - 6.0) <= 0.2);
    CHECK(p.sse < 1e-6);

    SUBCASE("time translation leaves the fit unchanged") {
        VehicleTrack l2 = leader, f2 = follower;
        for (auto& q : l2.points) q.t += 1000.0;
        for (auto& q : f2.points) q.t += 1000.0;
        NewellParams p2 = calibrate_newell(f2, l2, 1000.0, 1120.0);
        CHECK(std::abs(p2.tau - p.tau) < 1e-6);
        CHECK(std::abs(p2.d - p.d) < 1e-6);
    }
}

TEST_CASE("calibration tolerates measurement noise") {
    VehicleTrack leader = sine_leader("l", 100.0, 0.0, 120.0);
    for (unsigned seed : {3u, 12u, 77u}) {
        VehicleTrack follower = shadow(leader, "f", 1.2, 6.0, 2.0, 120.0);
        std::mt19937 rng(seed);
        std::normal_distribution<double> noise(0.0, 0.1);
        for (auto& p : follower.points) p.x += noise(rng);
        NewellParams p = calibrate_newell(follower, leader, 0.0, 120.0);
        CHECK(p.flag == NewellParams::Flag::ok);
        CHECK(std::abs(p.tau - 1.2) <= 0.1);
        CHECK(std::abs(p.d - 6.0) <= 0.5);
    }
}

TEST_CASE("equilibrium pair pins only the combination v tau + d") {
    VehicleTrack leader;
    leader.vehicle_id = "l";
    VehicleTrack follower;
    follower.vehicle_id = "f";
    for (int i = 0; i <= 600; ++i) {
        TrajectoryPoint p;
        p.t = 0.1 * i;
        p.x = 100.0 + 20.0 * p.t;
        p.lane_id = 1;
        leader.points.push_back(p);
        p.x -= 25.0;
        follower.points.push_back(p);
    }
    NewellParams p = calibrate_newell(follower, leader, 0.0, 60.0);
    CHECK(p.flag == NewellParams::Flag::ok);
    CHECK(std::abs(20.0 * p.tau + p.d - 25.0) < 1e-3);
    CHECK(p.sse < 1e-6);
}

TEST_CASE("too little overlap is flagged, not fitted") {
    VehicleTrack leader = sine_leader("l", 100.0, 0.0, 60.0);
    VehicleTrack follower = shadow(leader, "f", 1.0, 5.0, 1.0, 3.0);
    NewellParams p = calibrate_newell(follower, leader, 0.0, 60.0);
    CHECK(p.flag == NewellParams::Flag::short_range);
    CHECK(std::isnan(p.sse));
}

TEST_CASE("parked leader with a moving follower is low confidence") {
    VehicleTrack leader;
    leader.vehicle_id = "l";
    VehicleTrack follower;
    follower.vehicle_id = "f";
    for (int i = 0; i <= 600; ++i) {
        TrajectoryPoint p;
        p.t = 0.1 * i;
        p.x = 200.0;
        p.lane_id = 1;
        leader.points.push_back(p);
        p.x = 100.0 + 0.5 * p.t;
        follower.points.push_back(p);
    }
    NewellParams p = calibrate_newell(follower, leader, 0.0, 60.0);
    CHECK(p.flag == NewellParams::Flag::low_confidence);
}

TEST_CASE("wave arrival times accumulate the pair delays") {
    std::vector<NewellParams> params(3);
    params[0].tau = 1.0;
    params[1].tau = 1.5;
    params[2].tau = 0.8;
    DemarcationSchedule s = demarcation_times(100.0, params);
    REQUIRE(s.times.size() == 3);
    CHECK(s.times[0] == doctest::Approx(101.0).epsilon(1e-12));
    CHECK(s.times[1] == doctest::Approx(102.5).epsilon(1e-12));
    CHECK(s.times[2] == doctest::Approx(103.3).epsilon(1e-12));
}

TEST_CASE("chain calibration walks followers upstream") {
    VehicleTrack leader = sine_leader("l", 500.0, 0.0, 200.0);
    VehicleTrack f1 = shadow(leader, "f1", 1.0, 5.0, 1.0, 200.0);
    VehicleTrack f2 = shadow(f1, "f2", 1.5, 6.0, 2.5, 200.0);
    VehicleTrack f3 = shadow(f2, "f3", 0.8, 7.0, 3.3, 200.0);

    ChainOptions opts;
    opts.window_start = 0.0;
    opts.window_end = 200.0;

    SUBCASE("all pairs fit with the true delays") {
        std::vector<double> pool;
        ChainResult r = calibrate_chain({&leader, &f1, &f2, &f3}, 100.0, opts, pool);
        REQUIRE(r.params.size() == 3);
        CHECK(r.truncated == 0);
        CHECK(std::abs(r.params[0].tau - 1.0) <= 0.05);
        CHECK(std::abs(r.params[1].tau - 1.5) <= 0.05);
        CHECK(std::abs(r.params[2].tau - 0.8) <= 0.05);
        CHECK(std::abs(r.schedule.times[2] - 103.3) <= 0.15);
        CHECK(pool.size() == 3);
    }

    SUBCASE("arrivals past the window end drop the tail") {
        ChainOptions tight = opts;
        tight.window_end = 102.0;
        std::vector<double> pool;
        ChainResult r = calibrate_chain({&leader, &f1, &f2, &f3}, 100.0, tight, pool);
        REQUIRE(r.params.size() == 1);
        CHECK(r.truncated == 2);
        CHECK(r.schedule.times.size() == 1);
    }

    SUBCASE("unfittable followers take the pool median") {
        VehicleTrack late = shadow(f1, "late", 2.0, 3.0, 98.0, 200.0);  // 2 s of pre-arrival data
        std::vector<double> pool;
        ChainResult r = calibrate_chain({&leader, &f1, &late}, 100.0, opts, pool);
        REQUIRE(r.params.size() == 2);
        CHECK(r.params[0].flag == NewellParams::Flag::ok);
        CHECK(r.params[1].flag == NewellParams::Flag::fallback);
        CHECK(r.params[1].tau == doctest::Approx(r.params[0].tau));
        CHECK(pool.size() == 1);  // fallbacks never feed the pool
    }

    SUBCASE("a pre-seeded pool supplies the median") {
        VehicleTrack late = shadow(f1, "late", 2.0, 3.0, 98.0, 200.0);
        std::vector<double> pool{0.7, 0.9, 2.0};
        ChainResult r = calibrate_chain({&f1, &late}, 100.0, opts, pool);
        REQUIRE(r.params.size() == 1);
        CHECK(r.params[0].flag == NewellParams::Flag::fallback);
        CHECK(r.params[0].tau == doctest::Approx(0.9));
    }
}
