#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "lcimpact/extraction.hpp"

using namespace lcimpact;

namespace {

VehicleTrack track_with_lanes(const std::string& id, const std::vector<int>& lanes) {
    VehicleTrack tr;
    tr.vehicle_id = id;
    for (size_t i = 0; i < lanes.size(); ++i) {
        TrajectoryPoint p;
        p.t = 0.1 * static_cast<double>(i);
        p.x = static_cast<double>(i);
        p.lane_id = lanes[i];
        tr.points.push_back(p);
    }
    return tr;
}

// constant-speed track fully inside one lane
VehicleTrack cruiser(const std::string& id, int lane, double x0, double v, double t0, double t1) {
    VehicleTrack tr;
    tr.vehicle_id = id;
    int n = static_cast<int>(std::llround((t1 - t0) / 0.1)) + 1;
    for (int i = 0; i < n; ++i) {
        TrajectoryPoint p;
        p.t = t0 + 0.1 * i;
        p.x = x0 + v * (p.t - t0);
        p.speed = v;
        p.lane_id = lane;
        p.lateral = lane == 2 ? 3.5 : 0.0;
        tr.points.push_back(p);
    }
    return tr;
}

}  // namespace

TEST_CASE("crossings detected at the first sample of the new lane") {
    Dataset data;
    data.tracks.emplace("a", track_with_lanes("a", {1, 1, 2, 2}));
    data.tracks.emplace("b", track_with_lanes("b", {1, 1, 1, 1}));
    data.tracks.emplace("c", track_with_lanes("c", {1, 2, 1}));

    auto crossings = detect_crossings(data);
    REQUIRE(crossings.size() == 3);

    int a_count = 0, c_count = 0;
    for (const auto& c : crossings) {
        if (c.vehicle_id == "a") {
            ++a_count;
            CHECK(c.t_lane == doctest::Approx(0.2));
            CHECK(c.from_lane == 1);
            CHECK(c.to_lane == 2);
        }
        if (c.vehicle_id == "c") ++c_count;
    }
    CHECK(a_count == 1);
    CHECK(c_count == 2);
}

TEST_CASE("discretionary filter drops multi-crossers and ramp moves") {
    Dataset data;
    data.tracks.emplace("single", track_with_lanes("single", {1, 1, 2, 2}));
    data.tracks.emplace("return", track_with_lanes("return", {1, 2, 2, 1}));
    data.tracks.emplace("ramp", track_with_lanes("ramp", {3, 3, 1, 1}));
    auto crossings = detect_crossings(data);
    auto kept = filter_discretionary(crossings, {1, 2});
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].vehicle_id == "single");
}

TEST_CASE("start time: noise floor then ramp") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> noise(-0.05, 0.05);
    std::vector<double> t, lat;
    for (int i = 0; i <= 500; ++i) {
        double ti = 0.1 * i;
        t.push_back(ti);
        lat.push_back(ti < 40.0 ? noise(rng) : (ti - 40.0) / 10.0 * 3.5);
    }
    auto r = detect_start_time(t, lat, 50.0, 0.1);
    REQUIRE(r.has_value());
    CHECK(std::abs(*r - 40.0) <= 0.3);
}

TEST_CASE("start time: strictly monotone window starts at the window") {
    std::vector<double> t, lat;
    for (int i = 0; i <= 100; ++i) {
        t.push_back(0.1 * i);
        lat.push_back(0.035 * i);  // rises the whole window
    }
    auto r = detect_start_time(t, lat, 10.0, 0.1);
    REQUIRE(r.has_value());
    CHECK(*r == t.front());
}

TEST_CASE("start time: oscillation until the crossing collapses to it") {
    // triangle wave +-0.3, ending on a descent, then the crossing sample
    std::vector<double> t, lat;
    int n = 200;
    for (int i = 0; i < n; ++i) {
        t.push_back(0.1 * i);
        int phase = i % 20;
        double v = phase < 10 ? 0.06 * phase : 0.06 * (20 - phase);
        lat.push_back(v - 0.3);
    }
    t.push_back(0.1 * n);
    lat.push_back(1.75);  // instant swerve across the marking
    auto r = detect_start_time(t, lat, 0.1 * n, 0.1);
    REQUIRE(r.has_value());
    CHECK(*r == doctest::Approx(0.1 * n));
}

TEST_CASE("start time: descending target direction mirrors") {
    std::vector<double> t, lat;
    for (int i = 0; i <= 500; ++i) {
        double ti = 0.1 * i;
        t.push_back(ti);
        lat.push_back(ti < 40.0 ? 0.0 : -(ti - 40.0) / 10.0 * 3.5);
    }
    auto r = detect_start_time(t, lat, 50.0, 0.1);
    REQUIRE(r.has_value());
    CHECK(std::abs(*r - 40.0) <= 0.3);
}

TEST_CASE("start time invariances") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> noise(-0.04, 0.04);
    std::vector<double> t, lat;
    for (int i = 0; i <= 400; ++i) {
        double ti = 0.1 * i;
        t.push_back(ti);
        lat.push_back(ti < 30.0 ? noise(rng) : (ti - 30.0) * 0.35);
    }
    auto base = detect_start_time(t, lat, 40.0, 0.1);
    REQUIRE(base.has_value());

    SUBCASE("constant lateral offset") {
        std::vector<double> lat2 = lat;
        for (auto& v : lat2) v += 17.3;
        auto r = detect_start_time(t, lat2, 40.0, 0.1);
        REQUIRE(r.has_value());
        CHECK(*r == *base);
    }
    SUBCASE("time translation") {
        std::vector<double> t2 = t;
        for (auto& v : t2) v += 1000.0;
        auto r = detect_start_time(t2, lat, 1040.0, 0.1);
        REQUIRE(r.has_value());
        CHECK(*r == doctest::Approx(*base + 1000.0));
    }
}

TEST_CASE("start time rejects short or still series") {
    std::vector<double> t{0.0, 0.1, 0.2}, lat{0.0, 0.1, 3.0};
    CHECK(!detect_start_time(t, lat, 0.2, 0.1).has_value());  // under 2 s of history

    std::vector<double> t2, lat2;
    for (int i = 0; i <= 100; ++i) {
        t2.push_back(0.1 * i);
        lat2.push_back(0.01);  // never moves
    }
    CHECK(!detect_start_time(t2, lat2, 10.0, 0.1).has_value());
}

TEST_CASE("neighbor assignment orders by distance with id tie-break") {
    Dataset data;
    double t0 = 0.0, t1 = 100.0;
    data.tracks.emplace("sv", cruiser("sv", 1, 500.0, 20.0, t0, t1));
    // target lane: leader ahead, three followers upstream at 20/40/60 m gaps
    data.tracks.emplace("tlv", cruiser("tlv", 2, 530.0, 20.0, t0, t1));
    data.tracks.emplace("f1", cruiser("f1", 2, 480.0, 20.0, t0, t1));
    data.tracks.emplace("f2", cruiser("f2", 2, 460.0, 20.0, t0, t1));
    data.tracks.emplace("f3", cruiser("f3", 2, 440.0, 20.0, t0, t1));
    // original lane neighbors
    data.tracks.emplace("lv", cruiser("lv", 1, 525.0, 20.0, t0, t1));
    data.tracks.emplace("g1", cruiser("g1", 1, 470.0, 20.0, t0, t1));

    LaneChangeInstance inst;
    inst.sv_id = "sv";
    inst.original_lane = 1;
    inst.target_lane = 2;
    inst.t_lane = 50.0;
    inst.t_sv_s = 48.0;
    inst.window_t0 = 0.0;
    inst.window_t1 = 100.0;
    inst.window_x0 = 500.0 + 20.0 * 48.0 - 500.0;
    inst.window_x1 = 500.0 + 20.0 * 48.0 + 500.0;

    REQUIRE(assign_neighbors(data, inst, 10));
    CHECK(inst.tlv_id == "tlv");
    REQUIRE(inst.lv_id.has_value());
    CHECK(*inst.lv_id == "lv");
    REQUIRE(inst.tfv_ids.size() == 3);
    CHECK(inst.tfv_ids[0] == "f1");
    CHECK(inst.tfv_ids[1] == "f2");
    CHECK(inst.tfv_ids[2] == "f3");
    REQUIRE(inst.fv_ids.size() == 1);
    CHECK(inst.fv_ids[0] == "g1");

    SUBCASE("equal x breaks ties by smaller vehicle id") {
        data.tracks.emplace("f2b", cruiser("f2b", 2, 460.0, 20.0, t0, t1));
        LaneChangeInstance inst2 = inst;
        inst2.tfv_ids.clear();
        REQUIRE(assign_neighbors(data, inst2, 10));
        REQUIRE(inst2.tfv_ids.size() == 4);
        CHECK(inst2.tfv_ids[1] == "f2");
        CHECK(inst2.tfv_ids[2] == "f2b");
    }

    SUBCASE("missing target leader rejects") {
        data.tracks.erase("tlv");
        LaneChangeInstance inst2 = inst;
        std::string reason;
        CHECK(!assign_neighbors(data, inst2, 10, &reason));
        CHECK(reason == "no_target_leader");
    }

    SUBCASE("follower leaving the lane truncates the list behind it") {
        auto& f2 = data.tracks.at("f2");
        for (auto& p : f2.points)
            if (p.t > 70.0) p.lane_id = 1;
        LaneChangeInstance inst2 = inst;
        REQUIRE(assign_neighbors(data, inst2, 10));
        REQUIRE(inst2.tfv_ids.size() == 1);
        CHECK(inst2.tfv_ids[0] == "f1");
    }

    SUBCASE("follower cap limits the list") {
        LaneChangeInstance inst2 = inst;
        REQUIRE(assign_neighbors(data, inst2, 2));
        CHECK(inst2.tfv_ids.size() == 2);
    }
}

TEST_CASE("interference detection") {
    Dataset data;
    double t0 = 0.0, t1 = 120.0;
    data.tracks.emplace("sv", cruiser("sv", 1, 500.0, 20.0, t0, t1));

    LaneChangeInstance inst;
    inst.sv_id = "sv";
    inst.original_lane = 1;
    inst.target_lane = 2;
    inst.t_lane = 50.0;
    inst.window_t1 = 100.0;
    inst.window_x0 = 500.0 + 20.0 * 50.0 - 500.0;

    SUBCASE("upstream cut-in during the window interferes") {
        auto other = cruiser("o", 1, 400.0, 20.0, t0, t1);  // 100 m upstream
        for (auto& p : other.points)
            if (p.t >= 60.0) p.lane_id = 2;  // cuts into the target lane at 60 s
        data.tracks.emplace("o", other);
        auto crossings = detect_crossings(data);
        CHECK(!interference_free(data, crossings, inst));
    }
    SUBCASE("downstream lane change does not interfere") {
        auto other = cruiser("o", 1, 600.0, 20.0, t0, t1);  // ahead of the SV
        for (auto& p : other.points)
            if (p.t >= 60.0) p.lane_id = 2;
        data.tracks.emplace("o", other);
        auto crossings = detect_crossings(data);
        CHECK(interference_free(data, crossings, inst));
    }
    SUBCASE("upstream change before the crossing does not interfere") {
        auto other = cruiser("o", 1, 400.0, 20.0, t0, t1);
        for (auto& p : other.points)
            if (p.t >= 20.0) p.lane_id = 2;  // before t_lane
        data.tracks.emplace("o", other);
        auto crossings = detect_crossings(data);
        CHECK(interference_free(data, crossings, inst));
    }
    SUBCASE("no other lane change") {
        data.tracks.emplace("o", cruiser("o", 2, 400.0, 20.0, t0, t1));
        auto crossings = detect_crossings(data);
        CHECK(interference_free(data, crossings, inst));
    }
}

TEST_CASE("full extraction on a constructed scene") {
    Dataset data;
    double t0 = 0.0, t1 = 200.0;
    double v = 20.0;

    // SV cruises in lane 1, ramps laterally from t=100, flips lane at 101.5
    VehicleTrack sv = cruiser("sv", 1, 1000.0, v, t0, t1);
    for (auto& p : sv.points) {
        if (p.t >= 100.0) {
            double frac = std::min(1.0, (p.t - 100.0) / 3.0);
            p.lateral = frac * 3.5;
            if (frac > 0.5) p.lane_id = 2;
        }
    }
    data.tracks.emplace("sv", sv);
    data.tracks.emplace("tlv", cruiser("tlv", 2, 1040.0, v, t0, t1));
    data.tracks.emplace("tfv1", cruiser("tfv1", 2, 960.0, v, t0, t1));
    data.tracks.emplace("lv", cruiser("lv", 1, 1030.0, v, t0, t1));
    data.tracks.emplace("fv1", cruiser("fv1", 1, 970.0, v, t0, t1));

    ExtractionConfig cfg;
    ExtractionResult res = extract_instances(data, cfg);
    REQUIRE(res.instances.size() == 1);
    const auto& inst = res.instances[0];
    CHECK(inst.sv_id == "sv");
    CHECK(inst.original_lane == 1);
    CHECK(inst.target_lane == 2);
    CHECK(std::abs(inst.t_sv_s - 100.0) <= 0.3);
    CHECK(inst.t_lane == doctest::Approx(101.6));
    CHECK(inst.tlv_id == "tlv");
    CHECK(inst.tfv_ids == std::vector<std::string>{"tfv1"});
    REQUIRE(inst.lv_id.has_value());
    CHECK(inst.fv_ids == std::vector<std::string>{"fv1"});

    SUBCASE("an upstream cut-in rejects the instance") {
        auto intruder = cruiser("zz", 1, 900.0, v, t0, t1);
        for (auto& p : intruder.points)
            if (p.t >= 120.0) p.lane_id = 2;
        data.tracks.emplace("zz", intruder);
        ExtractionResult res2 = extract_instances(data, cfg);
        // the intruder itself is also a crossing candidate; our sv must be rejected
        bool sv_accepted = false;
        std::string sv_reason;
        for (const auto& i : res2.instances)
            if (i.sv_id == "sv") sv_accepted = true;
        for (const auto& r : res2.rejections)
            if (r.candidate_id.rfind("sv_", 0) == 0) sv_reason = r.reason;
        CHECK(!sv_accepted);
        CHECK(sv_reason == "interference");
    }
}
