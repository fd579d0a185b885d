#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lcimpact/newell.hpp"
#include "lcimpact/trajectory.hpp"

namespace lcimpact {

// Travel-distance balance per interval: integral of (follower speed minus
// reference-leader speed) over each dt bin. `pre` is chronological and
// anchored backward from T_s (pre.front() is the oldest bin, pre.back() ends
// at T_s); `post` is anchored forward from T_s.
struct TdbSeries {
    double dt = 0.5;
    double T_lb = 0.0;  // lower bound of usable data
    double T_s = 0.0;   // demarcation time of this follower
    double T_ub = 0.0;  // upper bound of usable data
    std::vector<double> pre;
    std::vector<double> post;
};

// nullopt when a bin cannot be integrated (coverage hole inside the range).
std::optional<TdbSeries> compute_tdb(const VehicleTrack& follower, const VehicleTrack& reference,
                                     double T_lb, double T_s, double T_ub, double dt);

// Sample statistics of the pre-segment, split by sign. Populations use 1/m
// and 1/(n_f - m) divisors; an empty side degenerates to (0, 0).
struct ThresholdBand {
    double mu_pos = 0.0, sigma_pos = 0.0;
    double mu_neg = 0.0, sigma_neg = 0.0;
    int m = 0;    // count of non-negative pre bins
    int n_f = 0;  // total pre bins
    bool pos_empty = true, neg_empty = true;
};

ThresholdBand band_stats(std::span<const double> pre);

// 1 when the value falls outside its sign's band (band edges inclusive -> 0).
int classify_status(double tdb, const ThresholdBand& band);

struct StatusRun {
    int start = 0;   // 1-based index within its segment
    int length = 0;
};

struct StatusSeries {
    std::vector<int> pre;   // after zeroing runs of length <= omega_star
    std::vector<int> post;  // untouched
    std::vector<StatusRun> pre_runs;  // runs before zeroing
    std::vector<StatusRun> post_runs;
    int omega_star = 0;  // longest pre run (0 when the pre segment is clean)
};

StatusSeries analyze_runs(std::vector<int> pre, std::vector<int> post);

// K^A: union of post runs strictly longer than omega_star, as sorted 1-based
// post-segment indices.
std::vector<int> affected_intervals(const StatusSeries& status);

struct Verdict {
    bool affected = false;  // Upsilon
    double t_start = 0.0;   // T_s + (min K - 1) dt
    double t_end = 0.0;     // T_s + (max K) dt
    double duration = 0.0;  // t_end - t_start (0 when unaffected)
};

Verdict follower_verdict(const std::vector<int>& k_affected, double T_s, double dt);

struct JudgmentDiagnostics {
    bool neg_inner_vacuous = false;  // mu_neg + sigma_neg >= 0: case 2 can never fire
    bool pos_inner_vacuous = false;  // mu_pos - sigma_pos <= 0: case 3 can never fire
    int sign_flips = 0;              // case-3 hits (small positive value pushed negative)
};

// Corrected TDB: subtracts the nearest band edge; in-band values collapse to
// zero. Cases evaluated in declaration order, first match wins.
double compute_ctdb(double tdb, const ThresholdBand& band, JudgmentDiagnostics* diag = nullptr);

// Sum of corrected balances over the affected intervals (w_i^A).
double follower_magnitude(std::span<const double> ctdb_post, const std::vector<int>& k_affected);

struct FollowerAnalysis {
    int index = 0;  // 1-based upstream position
    std::string vehicle_id;
    NewellParams params;
    TdbSeries tdb;
    ThresholdBand band;
    StatusSeries status;
    std::vector<int> k_affected;
    Verdict verdict;
    std::vector<double> ctdb_post;
    double w = 0.0;  // w_i^A
    JudgmentDiagnostics diagnostics;
};

// Full judgment chain for one follower. nullopt when TDB bins cannot be
// formed over [T_lb, T_ub].
std::optional<FollowerAnalysis> analyze_follower(const VehicleTrack& follower,
                                                 const VehicleTrack& reference,
                                                 const NewellParams& params, double T_s,
                                                 double T_lb, double T_ub, double dt);

struct LaneImpactSummary {
    int lane_id = 0;
    int n_followers = 0;     // N
    int n_affected_scan = 0; // N_A per the double-zero scan
    double W = 0.0;          // lane-level magnitude, meters
    double T = 0.0;          // lane-level duration, seconds
    std::optional<double> t_S, t_E;  // global start/end of the affected period
    std::optional<double> t_last;    // t_E - t_S
};

// Lane aggregation: N_A from the first double unaffected pair, W as the
// magnitude sum over affected followers up to N_A, T as max(t_E - t_S,
// longest per-follower duration). When follower N_A itself is unaffected the
// end time falls back to the largest-index affected follower.
LaneImpactSummary lane_summary(std::span<const FollowerAnalysis> followers, int lane_id, double dt);

// W_target + W_original; a missing original-lane summary contributes zero.
double global_magnitude(const LaneImpactSummary& target,
                        const std::optional<LaneImpactSummary>& original);

}  // namespace lcimpact
