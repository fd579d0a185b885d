#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lcimpact/trajectory.hpp"

namespace lcimpact {

struct CrossingEvent {
    std::string vehicle_id;
    double t_lane = 0.0;  // time of the first sample in the new lane
    int from_lane = 0;
    int to_lane = 0;
};

struct LaneChangeInstance {
    std::string instance_id;
    std::string sv_id;
    int original_lane = 0;
    int target_lane = 0;
    double t_lane = 0.0;   // lane_id flip
    double t_sv_s = 0.0;   // maneuver start T_SV^s
    double x_at_t_lane = 0.0;
    double window_t0 = 0.0, window_t1 = 0.0;  // [t_lane - w, t_lane + w]
    double window_x0 = 0.0, window_x1 = 0.0;

    std::string tlv_id;               // target-lane leader (always present)
    std::optional<std::string> lv_id; // original-lane leader
    std::vector<std::string> tfv_ids; // target-lane followers, nearest first
    std::vector<std::string> fv_ids;  // original-lane followers, nearest first
};

struct Rejection {
    std::string candidate_id;  // vehicle id + crossing time
    std::string reason;
};

struct ExtractionConfig {
    std::vector<int> main_lanes{1, 2};  // first entry = driving lane
    double window_t = 50.0;             // seconds each side of t_lane
    double window_x = 500.0;            // meters each side of x(t_lane)
    double eps_lat = 0.1;               // dead-band for the start-time scan, meters
    int follower_cap = 10;
};

// One event per lane_id transition of every track.
std::vector<CrossingEvent> detect_crossings(const Dataset& data);

// Keeps crossings between main lanes made by vehicles with exactly one
// crossing overall. Drops ramp-lane crossings and multi-crossing vehicles.
std::vector<CrossingEvent> filter_discretionary(const std::vector<CrossingEvent>& crossings,
                                                const std::vector<int>& main_lanes);

// True when no other vehicle upstream of the SV (inside the x window) changes
// into the target or original lane during [t_lane, window end].
bool interference_free(const Dataset& data, const std::vector<CrossingEvent>& all_crossings,
                       const LaneChangeInstance& inst);

// Maneuver onset: earliest instant from which the lateral series approaches
// T_lane monotonically toward the target lane under the eps dead-band.
// Series must cover at least 2 s before t_lane; nullopt when it does not or
// when no movement direction can be established.
std::optional<double> detect_start_time(std::span<const double> t, std::span<const double> lateral,
                                        double t_lane, double eps_lat);

// Fills tlv/lv/tfv/fv by scanning lane occupants at t_sv_s, ordered by
// distance, ties broken by smaller vehicle id. Followers must stay in their
// lane for the whole time window (list truncated at the first violator).
// Returns false when no target-lane leader exists or the leader does not
// keep the target lane through the window; *reason names the failed check.
bool assign_neighbors(const Dataset& data, LaneChangeInstance& inst, int follower_cap,
                      std::string* reason = nullptr);

struct ExtractionResult {
    std::vector<LaneChangeInstance> instances;
    std::vector<Rejection> rejections;
};

// Full extraction pass. Lateral offsets must already be computed for tracks
// that change lanes.
ExtractionResult extract_instances(const Dataset& data, const ExtractionConfig& cfg);

}  // namespace lcimpact
