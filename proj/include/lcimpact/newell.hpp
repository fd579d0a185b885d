#pragma once

#include <span>
#include <string>
#include <vector>

#include "lcimpact/trajectory.hpp"

namespace lcimpact {

struct CalibBounds {
    double tau_min = 0.1, tau_max = 5.0;  // seconds
    double d_min = 0.1, d_max = 10.0;     // meters
    double tau_step = 0.1;
    double d_step = 0.1;
    double min_range = 5.0;  // seconds of usable overlap required
};

struct NewellParams {
    double tau = 1.0;  // wave travel time between this pair, seconds
    double d = 5.0;    // jam spacing contribution, meters
    double sse = 0.0;  // position residual at the optimum, m^2
    // ok            clean fit
    // low_confidence degenerate geometry (leader barely moves)
    // short_range   usable overlap below min_range, no fit attempted
    // fallback      tau replaced by the instance median (set by the chain)
    enum class Flag { ok, low_confidence, short_range, fallback } flag = Flag::ok;
};

const char* to_string(NewellParams::Flag flag);

// Follower positions predicted from the leader trajectory: x(t) =
// x_leader(t - tau) - d, linearly interpolated. NaN where the leader has no
// coverage.
std::vector<double> simulate_newell(const VehicleTrack& leader, double tau, double d,
                                    std::span<const double> eval_times);

// Least-squares (tau, d) over follower grid samples in [t0, t1]: coarse grid
// scan followed by a Nelder-Mead refinement confined to the bounds box. The
// returned objective never exceeds the best probed grid value.
NewellParams calibrate_newell(const VehicleTrack& follower, const VehicleTrack& leader, double t0,
                              double t1, const CalibBounds& bounds = {});

struct DemarcationSchedule {
    double t0 = 0.0;            // anchor (maneuver start of the lane changer)
    std::vector<double> times;  // times[i] = anchor + sum of tau_1..tau_{i+1}
};

// Cumulative wave arrival times from per-follower parameters.
DemarcationSchedule demarcation_times(double t_sv_s, std::span<const NewellParams> params);

struct ChainOptions {
    CalibBounds bounds;
    double window_start = 0.0;
    double window_end = 0.0;
    double fallback_tau = 1.0;
};

struct ChainResult {
    std::vector<NewellParams> params;  // one per analyzed follower, in order
    DemarcationSchedule schedule;
    int truncated = 0;  // followers dropped from the tail (schedule past window or short range)
};

// Walks the follower chain upstream: follower j is calibrated against its
// immediate leader on [window_start, T_{j-1}^s], the range is extended once by
// the provisional tau and the fit repeated, then T_j^s = T_{j-1}^s + tau_j.
// Flagged fits take the median tau of prior successes in `tau_pool` (the
// chain appends its own successes to the pool). Followers whose arrival time
// would pass window_end are dropped along with everything behind them.
ChainResult calibrate_chain(const std::vector<const VehicleTrack*>& chain, double t_sv_s,
                            const ChainOptions& opts, std::vector<double>& tau_pool);

}  // namespace lcimpact
