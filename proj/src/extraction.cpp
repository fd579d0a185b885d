#include "lcimpact/extraction.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace lcimpact {

namespace {
constexpr double kTimeTol = 1e-6;
}

std::vector<CrossingEvent> detect_crossings(const Dataset& data) {
    std::vector<CrossingEvent> out;
    for (const auto& [id, tr] : data.tracks) {
        for (std::size_t i = 1; i < tr.points.size(); ++i) {
            if (tr.points[i].lane_id != tr.points[i - 1].lane_id) {
                out.push_back({id, tr.points[i].t, tr.points[i - 1].lane_id, tr.points[i].lane_id});
            }
        }
    }
    return out;
}

std::vector<CrossingEvent> filter_discretionary(const std::vector<CrossingEvent>& crossings,
                                                const std::vector<int>& main_lanes) {
    std::map<std::string, int> counts;
    for (const auto& c : crossings) ++counts[c.vehicle_id];

    auto is_main = [&](int lane) {
        return std::find(main_lanes.begin(), main_lanes.end(), lane) != main_lanes.end();
    };

    std::vector<CrossingEvent> out;
    for (const auto& c : crossings) {
        if (counts[c.vehicle_id] != 1) continue;
        if (!is_main(c.from_lane) || !is_main(c.to_lane)) continue;
        out.push_back(c);
    }
    return out;
}

bool interference_free(const Dataset& data, const std::vector<CrossingEvent>& all_crossings,
                       const LaneChangeInstance& inst) {
    auto sv_it = data.tracks.find(inst.sv_id);
    if (sv_it == data.tracks.end()) return false;
    const VehicleTrack& sv = sv_it->second;

    for (const auto& c : all_crossings) {
        if (c.vehicle_id == inst.sv_id) continue;
        if (c.to_lane != inst.target_lane && c.to_lane != inst.original_lane) continue;
        if (c.t_lane < inst.t_lane - kTimeTol || c.t_lane > inst.window_t1 + kTimeTol) continue;
        auto other_it = data.tracks.find(c.vehicle_id);
        if (other_it == data.tracks.end()) continue;
        auto x_other = other_it->second.x_at(c.t_lane);
        auto x_sv = sv.x_at(c.t_lane);
        if (!x_other || !x_sv) continue;
        if (*x_other < *x_sv && *x_other >= inst.window_x0) return false;
    }
    return true;
}

std::optional<double> detect_start_time(std::span<const double> t, std::span<const double> lateral,
                                        double t_lane, double eps_lat) {
    // samples at or before the crossing
    std::size_t n = 0;
    while (n < t.size() && t[n] <= t_lane + kTimeTol) ++n;
    if (n < 2) return std::nullopt;
    if (t_lane - t[0] < 2.0 - kTimeTol) return std::nullopt;

    // movement direction: crossing-time value against the early median
    std::vector<double> head;
    for (std::size_t i = 0; i < n && t[i] <= t[0] + 2.0 + kTimeTol; ++i) head.push_back(lateral[i]);
    std::nth_element(head.begin(), head.begin() + static_cast<long>(head.size() / 2), head.end());
    double median = head[head.size() / 2];
    double move = lateral[n - 1] - median;
    if (std::abs(move) < eps_lat) return std::nullopt;
    double sign = move > 0 ? 1.0 : -1.0;

    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = sign * lateral[i];

    // zig-zag decomposition: alternating extremes confirmed by an eps swing
    struct Turn {
        std::size_t idx;
        double val;
        bool peak;
    };
    std::vector<Turn> turns;
    int trend = 0;  // 0 unknown, +1 rising, -1 falling
    std::size_t max_i = 0, min_i = 0;
    double max_v = s[0], min_v = s[0];
    for (std::size_t i = 1; i < n; ++i) {
        double v = s[i];
        if (trend >= 0 && v > max_v) { max_v = v; max_i = i; }
        if (trend <= 0 && v < min_v) { min_v = v; min_i = i; }
        if (trend >= 0 && v <= max_v - eps_lat) {
            turns.push_back({max_i, max_v, true});
            trend = -1;
            min_v = v;
            min_i = i;
        } else if (trend <= 0 && v >= min_v + eps_lat) {
            turns.push_back({min_i, min_v, false});
            trend = 1;
            max_v = v;
            max_i = i;
        }
    }

    // onset: last instant at or below the midline between the final resting
    // level (trough) and the preceding significant peak
    std::size_t trough_idx;
    double trough_val, prior_peak;
    if (turns.empty()) {
        // sub-eps fluctuation throughout: rest level = global minimum, peak =
        // largest excursion before it (a strictly monotone series keeps its
        // first sample as both, pinning the onset to the window start)
        trough_idx = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (s[i] < s[trough_idx]) trough_idx = i;
        trough_val = s[trough_idx];
        prior_peak = s[0];
        for (std::size_t i = 0; i <= trough_idx; ++i) prior_peak = std::max(prior_peak, s[i]);
    } else {
        const Turn& last = turns.back();
        if (last.peak) return t_lane;  // no eps-significant approach into the crossing
        trough_idx = last.idx;
        trough_val = last.val;
        prior_peak = last.val;
        if (turns.size() >= 2) {
            prior_peak = turns[turns.size() - 2].val;
        } else {
            for (std::size_t i = 0; i <= last.idx; ++i) prior_peak = std::max(prior_peak, s[i]);
        }
    }
    double mid = 0.5 * (trough_val + prior_peak);
    std::size_t best = trough_idx;
    for (std::size_t i = trough_idx; i < n; ++i) {
        if (s[i] <= mid) best = i;
    }
    // a final approach without interior samples is an instant swerve
    if (best + 2 >= n && trough_idx + 2 >= n) return t[n - 1];
    return t[best];
}

namespace {

struct Candidate {
    double x;
    std::string id;
};

}  // namespace

bool assign_neighbors(const Dataset& data, LaneChangeInstance& inst, int follower_cap,
                      std::string* reason) {
    auto sv_it = data.tracks.find(inst.sv_id);
    if (sv_it == data.tracks.end()) {
        if (reason) *reason = "sv_coverage";
        return false;
    }
    auto x_sv_opt = sv_it->second.x_at(inst.t_sv_s);
    if (!x_sv_opt) {
        if (reason) *reason = "sv_coverage";
        return false;
    }
    double x_sv = *x_sv_opt;

    std::vector<Candidate> target_leaders, target_followers, orig_leaders, orig_followers;
    for (const auto& [id, tr] : data.tracks) {
        if (id == inst.sv_id) continue;
        auto lane = tr.lane_at(inst.t_sv_s);
        auto x = tr.x_at(inst.t_sv_s);
        if (!lane || !x) continue;
        if (*x < inst.window_x0 || *x > inst.window_x1) continue;
        if (*lane == inst.target_lane) {
            (*x > x_sv ? target_leaders : target_followers).push_back({*x, id});
        } else if (*lane == inst.original_lane) {
            (*x > x_sv ? orig_leaders : orig_followers).push_back({*x, id});
        }
    }

    auto nearer_leader = [](const Candidate& a, const Candidate& b) {
        if (a.x != b.x) return a.x < b.x;
        return a.id < b.id;
    };
    auto nearer_follower = [](const Candidate& a, const Candidate& b) {
        if (a.x != b.x) return a.x > b.x;
        return a.id < b.id;
    };
    std::sort(target_leaders.begin(), target_leaders.end(), nearer_leader);
    std::sort(orig_leaders.begin(), orig_leaders.end(), nearer_leader);
    std::sort(target_followers.begin(), target_followers.end(), nearer_follower);
    std::sort(orig_followers.begin(), orig_followers.end(), nearer_follower);

    if (target_leaders.empty()) {
        if (reason) *reason = "no_target_leader";
        return false;
    }
    const VehicleTrack& tlv = data.tracks.at(target_leaders.front().id);
    if (!tlv.in_lane_throughout(inst.target_lane, inst.window_t0, inst.window_t1)) {
        if (reason) *reason = "target_leader_coverage";
        return false;
    }
    inst.tlv_id = target_leaders.front().id;

    inst.lv_id.reset();
    if (!orig_leaders.empty()) {
        const VehicleTrack& lv = data.tracks.at(orig_leaders.front().id);
        if (lv.in_lane_throughout(inst.original_lane, inst.window_t0, inst.window_t1)) {
            inst.lv_id = orig_leaders.front().id;
        }
    }

    auto take_followers = [&](const std::vector<Candidate>& cands, int lane) {
        std::vector<std::string> out;
        for (const auto& c : cands) {
            if (static_cast<int>(out.size()) >= follower_cap) break;
            const VehicleTrack& tr = data.tracks.at(c.id);
            if (!tr.in_lane_throughout(lane, inst.window_t0, inst.window_t1)) break;
            out.push_back(c.id);
        }
        return out;
    };
    inst.tfv_ids = take_followers(target_followers, inst.target_lane);
    inst.fv_ids = take_followers(orig_followers, inst.original_lane);
    return true;
}

ExtractionResult extract_instances(const Dataset& data, const ExtractionConfig& cfg) {
    ExtractionResult result;
    auto crossings = detect_crossings(data);
    auto discretionary = filter_discretionary(crossings, cfg.main_lanes);

    for (const auto& c : discretionary) {
        std::string candidate_id =
            c.vehicle_id + "_" + std::to_string(static_cast<long long>(std::llround(c.t_lane * 1000.0)));
        auto reject = [&](const std::string& reason) {
            result.rejections.push_back({candidate_id, reason});
        };

        const VehicleTrack& sv = data.tracks.at(c.vehicle_id);
        LaneChangeInstance inst;
        inst.instance_id = candidate_id;
        inst.sv_id = c.vehicle_id;
        inst.original_lane = c.from_lane;
        inst.target_lane = c.to_lane;
        inst.t_lane = c.t_lane;
        inst.window_t0 = c.t_lane - cfg.window_t;
        inst.window_t1 = c.t_lane + cfg.window_t;

        auto x_ref = sv.x_at(c.t_lane);
        if (!x_ref) {
            reject("sv_coverage");
            continue;
        }
        inst.x_at_t_lane = *x_ref;
        inst.window_x0 = *x_ref - cfg.window_x;
        inst.window_x1 = *x_ref + cfg.window_x;

        // lateral series over [window start, t_lane]
        std::vector<double> ts, lats;
        for (const auto& p : sv.points) {
            if (p.t < inst.window_t0 - kTimeTol) continue;
            if (p.t > inst.t_lane + kTimeTol) break;
            if (!std::isfinite(p.lateral)) continue;
            ts.push_back(p.t);
            lats.push_back(p.lateral);
        }
        if (ts.size() < 2 || inst.t_lane - ts.front() < 2.0 - kTimeTol) {
            reject("short_lateral_history");
            continue;
        }
        auto t_start = detect_start_time(ts, lats, inst.t_lane, cfg.eps_lat);
        if (!t_start) {
            reject("start_time_undetermined");
            continue;
        }
        inst.t_sv_s = *t_start;

        std::string reason;
        if (!assign_neighbors(data, inst, cfg.follower_cap, &reason)) {
            reject(reason);
            continue;
        }
        if (!interference_free(data, crossings, inst)) {
            reject("interference");
            continue;
        }
        result.instances.push_back(std::move(inst));
    }
    return result;
}

}  // namespace lcimpact
