#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lcimpact/trajectory.hpp"

namespace lcimpact {

struct SpeedProfilePoint {
    double t = 0.0;
    double v = 0.0;  // m/s
};

struct SynthVehicle {
    double tau = 1.0;       // wave travel time behind the predecessor, s
    double d = 5.0;         // jam spacing behind the predecessor, m
    double extra_gap = 0.0; // additional free-flow slack, m
};

struct ScenarioSpec {
    std::string id_prefix;       // prepended to vehicle ids (episode batching)
    double t_begin = 0.0;
    double duration = 130.0;
    std::vector<SpeedProfilePoint> lead_profile{{0.0, 20.0}};  // shared by both lanes

    std::vector<SynthVehicle> original_lane;  // index 0 = platoon lead
    std::vector<SynthVehicle> target_lane;
    int original_lane_id = 1;
    int target_lane_id = 2;

    bool inject = true;
    int sv_index = 2;          // position of the lane changer in the original lane
    int target_gap_index = 2;  // SV inserts behind target_lane[target_gap_index]
    double insertion_time = 60.0;
    double gap_fraction = 0.5;  // 0 = on top of the new follower, 1 = on the new leader
    double lateral_ramp = 3.0;  // seconds to cross one lane width
    double v_des_factor = 1.25; // free-flow speed = factor * max profile speed

    double jitter_sigma = 0.05;  // lateral jitter, m (Gaussian per sample)
    double noise_sigma = 0.0;    // longitudinal position noise, m
    unsigned seed = 1;

    double x0 = 100.0;              // original-lane lead position at t_begin
    double x0_target = 110.0;       // target-lane lead position (overridden when inject)
    double lane_width = 3.5;
    double kilopost_origin = 5000.0;
    double anchor_lat = 36.0, anchor_lon = 139.5;
    double bearing_deg = 90.0;  // travel direction, clockwise from north

    std::string sv_vehicle_id() const;
};

struct GroundTruth {
    std::string sv_id;
    double t_maneuver = 0.0;  // lateral motion onset
    double t_cross = 0.0;     // lane_id flip
    int original_lane = 0;
    int target_lane = 0;
    // first time |v_modified - v_baseline| exceeds 0.1 m/s, keyed by vehicle
    std::map<std::string, double> onset;
    std::vector<std::string> affected_target;
    std::vector<std::string> affected_original;
};

// Equilibrium two-lane platoon: every vehicle is the exact shifted copy of
// its predecessor (plus optional free-flow slack), speeds are analytic.
Dataset generate_platoon(const ScenarioSpec& spec);

struct InjectionResult {
    Dataset data;
    GroundTruth truth;
};

// Moves the SV across the lane boundary at insertion_time and re-simulates
// every follower of both lanes behind the disturbance from the crossing
// instant. With spec.inject == false the baseline is returned unchanged.
// Throws when the insertion gap cannot clear the jam spacings.
InjectionResult inject_lane_change(const Dataset& baseline, const ScenarioSpec& spec);

// Raw-schema CSV (epoch-ms datetimes, meters, m/s) with stable formatting.
void write_csv(const Dataset& data, const ScenarioSpec& spec, const std::string& path);

void write_ground_truth(const GroundTruth& truth, const std::string& path);

// Plain-text key=value scenario description.
ScenarioSpec parse_scenario(const std::string& path);

}  // namespace lcimpact
