#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "lcimpact/synth.hpp"

using namespace lcimpact;

namespace {

ScenarioSpec base_spec() {
    ScenarioSpec s;
    s.duration = 130.0;
    s.original_lane.assign(4, SynthVehicle{1.0, 5.0, 0.0});
    s.target_lane.assign(5, SynthVehicle{1.0, 5.0, 0.0});
    s.sv_index = 2;
    s.target_gap_index = 2;
    s.insertion_time = 60.0;
    s.lateral_ramp = 3.0;
    s.gap_fraction = 0.5;
    s.v_des_factor = 1.25;
    s.noise_sigma = 0.0;
    s.seed = 3;
    return s;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("equilibrium platoon has exact spacings and analytic speeds") {
    ScenarioSpec spec = base_spec();
    spec.inject = false;
    Dataset data = generate_platoon(spec);

    REQUIRE(data.tracks.size() == 9);
    REQUIRE(data.tracks.count("A01") == 1);
    REQUIRE(data.tracks.count("A04") == 1);
    REQUIRE(data.tracks.count("B05") == 1);

    const auto& a1 = data.tracks.at("A01");
    const auto& a2 = data.tracks.at("A02");
    CHECK(a1.points.front().x == doctest::Approx(100.0).epsilon(1e-12));
    REQUIRE(a1.points.size() == a2.points.size());
    for (size_t k = 0; k < a1.points.size(); k += 97) {
        CHECK(a1.points[k].x - a2.points[k].x == doctest::Approx(25.0).epsilon(1e-12));
        CHECK(a1.points[k].speed == doctest::Approx(20.0).epsilon(1e-12));
        CHECK(a1.points[k].lane_id == 1);
        CHECK(a2.points[k].lane_id == 1);
    }
    CHECK(data.tracks.at("B01").points.front().lane_id == 2);
}

TEST_CASE("a profile slowdown reaches each follower delayed by its wave time") {
    ScenarioSpec spec = base_spec();
    spec.inject = false;
    spec.lead_profile = {{0.0, 20.0}, {60.0, 20.0}, {65.0, 15.0}, {130.0, 15.0}};
    Dataset data = generate_platoon(spec);

    // follower j runs the profile shifted by the cumulative wave time
    auto speed_at = [&](const std::string& id, double t) {
        auto v = data.tracks.at(id).speed_at(t);
        REQUIRE(v.has_value());
        return *v;
    };
    CHECK(speed_at("A01", 63.0) == doctest::Approx(17.0).epsilon(1e-9));   // profile(63)
    CHECK(speed_at("A02", 66.0) == doctest::Approx(15.0).epsilon(1e-9));   // profile(65)
    CHECK(speed_at("A03", 66.0) == doctest::Approx(16.0).epsilon(1e-9));   // profile(64)
    CHECK(speed_at("A04", 120.0) == doctest::Approx(15.0).epsilon(1e-9));  // settled
}

TEST_CASE("injection disabled returns the baseline unchanged") {
    ScenarioSpec spec = base_spec();
    spec.inject = false;
    Dataset baseline = generate_platoon(spec);
    InjectionResult res = inject_lane_change(baseline, spec);
    CHECK(res.truth.onset.empty());
    for (const auto& [id, tr] : baseline.tracks) {
        const auto& got = res.data.tracks.at(id);
        REQUIRE(got.points.size() == tr.points.size());
        for (size_t k = 0; k < tr.points.size(); k += 131) {
            CHECK(got.points[k].x == tr.points[k].x);
            CHECK(got.points[k].speed == tr.points[k].speed);
            CHECK(got.points[k].lane_id == tr.points[k].lane_id);
        }
    }
}

TEST_CASE("insertion into a tight gap produces a braking wave behind it") {
    ScenarioSpec spec = base_spec();
    Dataset baseline = generate_platoon(spec);
    InjectionResult res = inject_lane_change(baseline, spec);
    const GroundTruth& gt = res.truth;

    CHECK(gt.sv_id == "A03");
    CHECK(gt.t_maneuver == doctest::Approx(60.0));
    CHECK(gt.t_cross == doctest::Approx(61.6).epsilon(1e-9));

    const auto& sv = res.data.tracks.at("A03");
    CHECK(*sv.lane_at(59.0) == 1);
    CHECK(*sv.lane_at(62.0) == 2);
    // the lane changer keeps its longitudinal motion
    const auto& sv_base = baseline.tracks.at("A03");
    for (size_t k = 0; k < sv.points.size(); k += 113) {
        CHECK(sv.points[k].x == sv_base.points[k].x);
    }

    // the new follower brakes shortly after the crossing, within physical limits
    REQUIRE(gt.onset.count("B04") == 1);
    // the speed refresh reaches one sample before the first moved position
    CHECK(gt.onset.at("B04") >= gt.t_cross - 0.15);
    CHECK(gt.onset.at("B04") <= gt.t_cross + 0.5);
    const auto& tfv = res.data.tracks.at("B04");
    double v_min = 1e9;
    for (const auto& p : tfv.points) v_min = std::min(v_min, p.speed);
    CHECK(v_min < 15.0);
    CHECK(v_min > 3.0);

    // after relaxation the follower rides at the jam spacing behind the SV
    double spacing = *sv.x_at(100.0) - *tfv.x_at(100.0);
    CHECK(spacing == doctest::Approx(20.0 * 1.0 + 5.0).epsilon(0.02));

    // both lanes report affected vehicles from the speed change
    CHECK(std::count(gt.affected_target.begin(), gt.affected_target.end(), "B04") == 1);
    CHECK(std::count(gt.affected_original.begin(), gt.affected_original.end(), "A04") == 1);
    for (const auto& id : gt.affected_target) CHECK(id != gt.sv_id);

    // upstream onsets lag downstream ones in the target lane
    REQUIRE(gt.onset.count("B05") == 1);
    CHECK(gt.onset.at("B05") > gt.onset.at("B04"));
}

TEST_CASE("an insertion violating the jam spacings throws") {
    ScenarioSpec spec = base_spec();
    spec.gap_fraction = 0.1;  // 2.5 m to the new follower, below its 5 m spacing
    Dataset baseline = generate_platoon(spec);
    CHECK_THROWS_AS(inject_lane_change(baseline, spec), std::runtime_error);
}

TEST_CASE("a wide gap with no speed advantage leaves followers untouched") {
    ScenarioSpec spec = base_spec();
    spec.target_lane[3].extra_gap = 50.0;  // the insertion gap grows to 75 m
    spec.v_des_factor = 1.0;
    Dataset baseline = generate_platoon(spec);
    InjectionResult res = inject_lane_change(baseline, spec);

    CHECK(res.truth.affected_target.empty());
    CHECK(res.truth.affected_original.empty());
    const auto& got = res.data.tracks.at("B04");
    const auto& base = baseline.tracks.at("B04");
    REQUIRE(got.points.size() == base.points.size());
    for (size_t k = 0; k < got.points.size(); ++k) {
        CHECK(got.points[k].x == base.points[k].x);
        CHECK(got.points[k].speed == base.points[k].speed);
    }
}

TEST_CASE("emitted files are deterministic under a fixed seed") {
    ScenarioSpec spec = base_spec();
    auto emit = [&](const std::string& tag) {
        Dataset baseline = generate_platoon(spec);
        InjectionResult res = inject_lane_change(baseline, spec);
        std::string csv = "synth_csv_" + tag + ".csv";
        std::string gt = "synth_gt_" + tag + ".json";
        write_csv(res.data, spec, csv);
        write_ground_truth(res.truth, gt);
        return std::pair<std::string, std::string>(slurp(csv), slurp(gt));
    };
    auto [csv1, gt1] = emit("a");
    auto [csv2, gt2] = emit("b");
    CHECK(csv1 == csv2);
    CHECK(gt1 == gt2);
    CHECK(!csv1.empty());

    spec.seed = 4;
    auto [csv3, gt3] = emit("c");
    CHECK(csv1 != csv3);  // lateral jitter differs
    std::remove("synth_csv_a.csv");
    std::remove("synth_csv_b.csv");
    std::remove("synth_csv_c.csv");
    std::remove("synth_gt_a.json");
    std::remove("synth_gt_b.json");
    std::remove("synth_gt_c.json");
}

TEST_CASE("scenario files parse with lists, broadcasts and comments") {
    const char* path = "synth_scenario_test.cfg";
    {
        std::ofstream f(path);
        f << "# two-lane insertion case\n";
        f << "id_prefix = ep1_\n";
        f << "duration = 140\n";
        f << "lead_profile = 0:20, 50:20, 55:16\n";
        f << "n_original = 3\n";
        f << "n_target = 4\n";
        f << "taus_target = 1.0,1.2,0.8,1.1\n";
        f << "ds_target = 6.0\n";
        f << "gaps_target = 0,0,0,40  # slack before the last vehicle\n";
        f << "sv_index = 1\n";
        f << "target_gap_index = 1\n";
        f << "insertion_time = 70\n";
        f << "gap_fraction = 0.4\n";
        f << "seed = 17\n";
        f << "inject = 1\n";
        f << "\n";
    }
    ScenarioSpec spec = parse_scenario(path);
    std::remove(path);

    CHECK(spec.id_prefix == "ep1_");
    CHECK(spec.duration == doctest::Approx(140.0));
    REQUIRE(spec.lead_profile.size() == 3);
    CHECK(spec.lead_profile[1].t == doctest::Approx(50.0));
    CHECK(spec.lead_profile[2].v == doctest::Approx(16.0));
    REQUIRE(spec.original_lane.size() == 3);
    REQUIRE(spec.target_lane.size() == 4);
    CHECK(spec.target_lane[1].tau == doctest::Approx(1.2));
    CHECK(spec.target_lane[3].tau == doctest::Approx(1.1));
    CHECK(spec.target_lane[0].d == doctest::Approx(6.0));  // scalar broadcast
    CHECK(spec.target_lane[2].d == doctest::Approx(6.0));
    CHECK(spec.target_lane[3].extra_gap == doctest::Approx(40.0));
    CHECK(spec.original_lane[0].tau == doctest::Approx(1.0));  // defaults
    CHECK(spec.sv_index == 1);
    CHECK(spec.insertion_time == doctest::Approx(70.0));
    CHECK(spec.gap_fraction == doctest::Approx(0.4));
    CHECK(spec.seed == 17u);
    CHECK(spec.inject);
    CHECK(spec.sv_vehicle_id() == "ep1_A02");
}

TEST_CASE("invalid scenarios are rejected") {
    ScenarioSpec spec = base_spec();
    SUBCASE("insertion too close to the start") {
        spec.insertion_time = 5.0;
        CHECK_THROWS_AS(generate_platoon(spec), std::runtime_error);
    }
    SUBCASE("gap fraction on the boundary") {
        spec.gap_fraction = 1.0;
        CHECK_THROWS_AS(generate_platoon(spec), std::runtime_error);
    }
    SUBCASE("one-vehicle lane") {
        spec.target_lane.resize(1);
        CHECK_THROWS_AS(generate_platoon(spec), std::runtime_error);
    }
    SUBCASE("non-increasing profile times") {
        spec.lead_profile = {{0.0, 20.0}, {50.0, 18.0}, {50.0, 16.0}};
        CHECK_THROWS_AS(generate_platoon(spec), std::runtime_error);
    }
}
