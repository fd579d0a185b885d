#include "lcimpact/impact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lcimpact {

namespace {

constexpr double kTimeTol = 1e-9;

// Exact integral of the piecewise-linear speed series over [a, b].
std::optional<double> integrate_speed(const VehicleTrack& tr, double a, double b) {
    if (b <= a) return 0.0;
    if (!tr.covers(a, b)) return std::nullopt;
    auto va = tr.speed_at(a);
    auto vb = tr.speed_at(b);
    if (!va || !vb) return std::nullopt;

    double total = 0.0;
    double t_prev = a, v_prev = *va;
    std::size_t i = tr.index_at_or_before(a) + 1;
    for (; i < tr.points.size() && tr.points[i].t < b - kTimeTol; ++i) {
        const auto& p = tr.points[i];
        if (p.t <= t_prev + kTimeTol) continue;
        total += (p.t - t_prev) * 0.5 * (v_prev + p.speed);
        t_prev = p.t;
        v_prev = p.speed;
    }
    total += (b - t_prev) * 0.5 * (v_prev + *vb);
    return total;
}

}  // namespace

std::optional<TdbSeries> compute_tdb(const VehicleTrack& follower, const VehicleTrack& reference,
                                     double T_lb, double T_s, double T_ub, double dt) {
    if (dt <= 0.0) return std::nullopt;
    TdbSeries out;
    out.dt = dt;
    out.T_lb = T_lb;
    out.T_s = T_s;
    out.T_ub = T_ub;

    int n_f = static_cast<int>(std::floor((T_s - T_lb) / dt + kTimeTol));
    int n_r = static_cast<int>(std::floor((T_ub - T_s) / dt + kTimeTol));
    if (n_f < 0 || n_r < 0) return std::nullopt;

    auto bin = [&](double a, double b) -> std::optional<double> {
        auto f = integrate_speed(follower, a, b);
        auto r = integrate_speed(reference, a, b);
        if (!f || !r) return std::nullopt;
        return *f - *r;
    };

    out.pre.reserve(static_cast<std::size_t>(n_f));
    for (int i = 0; i < n_f; ++i) {  // i = 0 is the oldest bin
        double a = T_s - static_cast<double>(n_f - i) * dt;
        auto v = bin(a, a + dt);
        if (!v) return std::nullopt;
        out.pre.push_back(*v);
    }
    out.post.reserve(static_cast<std::size_t>(n_r));
    for (int k = 1; k <= n_r; ++k) {
        auto v = bin(T_s + (k - 1) * dt, T_s + k * dt);
        if (!v) return std::nullopt;
        out.post.push_back(*v);
    }
    return out;
}

ThresholdBand band_stats(std::span<const double> pre) {
    ThresholdBand b;
    b.n_f = static_cast<int>(pre.size());
    double sum_p = 0.0, sum_n = 0.0;
    for (double v : pre) {
        if (v >= 0.0) {
            ++b.m;
            sum_p += v;
        } else {
            sum_n += v;
        }
    }
    int n_neg = b.n_f - b.m;
    b.pos_empty = b.m == 0;
    b.neg_empty = n_neg == 0;
    if (!b.pos_empty) b.mu_pos = sum_p / b.m;
    if (!b.neg_empty) b.mu_neg = sum_n / n_neg;

    double ss_p = 0.0, ss_n = 0.0;
    for (double v : pre) {
        if (v >= 0.0) {
            ss_p += (v - b.mu_pos) * (v - b.mu_pos);
        } else {
            ss_n += (v - b.mu_neg) * (v - b.mu_neg);
        }
    }
    if (!b.pos_empty) b.sigma_pos = std::sqrt(ss_p / b.m);
    if (!b.neg_empty) b.sigma_neg = std::sqrt(ss_n / n_neg);
    return b;
}

int classify_status(double tdb, const ThresholdBand& band) {
    if (tdb >= 0.0) {
        return (tdb >= band.mu_pos - band.sigma_pos && tdb <= band.mu_pos + band.sigma_pos) ? 0 : 1;
    }
    return (tdb >= band.mu_neg - band.sigma_neg && tdb <= band.mu_neg + band.sigma_neg) ? 0 : 1;
}

namespace {

std::vector<StatusRun> find_runs(const std::vector<int>& v) {
    std::vector<StatusRun> runs;
    int i = 0, n = static_cast<int>(v.size());
    while (i < n) {
        if (v[i] == 0) {
            ++i;
            continue;
        }
        int start = i;
        while (i < n && v[i] == 1) ++i;
        runs.push_back({start + 1, i - start});
    }
    return runs;
}

}  // namespace

StatusSeries analyze_runs(std::vector<int> pre, std::vector<int> post) {
    StatusSeries s;
    s.pre_runs = find_runs(pre);
    s.post_runs = find_runs(post);
    s.omega_star = 0;
    for (const auto& r : s.pre_runs) s.omega_star = std::max(s.omega_star, r.length);
    // pre-segment runs no longer than the longest one are treated as inherent
    // traffic noise and cleared
    for (const auto& r : s.pre_runs) {
        if (r.length <= s.omega_star) {
            for (int i = r.start - 1; i < r.start - 1 + r.length; ++i) pre[i] = 0;
        }
    }
    s.pre = std::move(pre);
    s.post = std::move(post);
    return s;
}

std::vector<int> affected_intervals(const StatusSeries& status) {
    std::vector<int> k;
    for (const auto& r : status.post_runs) {
        if (r.length > status.omega_star) {
            for (int i = 0; i < r.length; ++i) k.push_back(r.start + i);
        }
    }
    std::sort(k.begin(), k.end());
    return k;
}

Verdict follower_verdict(const std::vector<int>& k_affected, double T_s, double dt) {
    Verdict v;
    if (k_affected.empty()) return v;
    v.affected = true;
    int k_min = k_affected.front();
    int k_max = k_affected.back();
    v.t_start = T_s + (k_min - 1) * dt;
    v.t_end = T_s + k_max * dt;
    v.duration = v.t_end - v.t_start;
    return v;
}

double compute_ctdb(double tdb, const ThresholdBand& band, JudgmentDiagnostics* diag) {
    double lo_n = band.mu_neg - band.sigma_neg;
    double hi_n = band.mu_neg + band.sigma_neg;
    double lo_p = band.mu_pos - band.sigma_pos;
    double hi_p = band.mu_pos + band.sigma_pos;

    double delta;
    if (tdb < lo_n) {
        delta = lo_n;
    } else if (hi_n < tdb && tdb < 0.0) {
        delta = hi_n;
    } else if (0.0 < tdb && tdb < lo_p) {
        delta = lo_p;
        if (diag) ++diag->sign_flips;
    } else if (tdb > hi_p) {
        delta = hi_p;
    } else {
        delta = tdb;
    }
    return tdb - delta;
}

double follower_magnitude(std::span<const double> ctdb_post, const std::vector<int>& k_affected) {
    double w = 0.0;
    for (int k : k_affected) {
        if (k >= 1 && k <= static_cast<int>(ctdb_post.size())) w += ctdb_post[k - 1];
    }
    return w;
}

std::optional<FollowerAnalysis> analyze_follower(const VehicleTrack& follower,
                                                 const VehicleTrack& reference,
                                                 const NewellParams& params, double T_s,
                                                 double T_lb, double T_ub, double dt) {
    auto tdb = compute_tdb(follower, reference, T_lb, T_s, T_ub, dt);
    if (!tdb) return std::nullopt;

    FollowerAnalysis fa;
    fa.vehicle_id = follower.vehicle_id;
    fa.params = params;
    fa.tdb = std::move(*tdb);
    fa.band = band_stats(fa.tdb.pre);
    fa.diagnostics.neg_inner_vacuous = fa.band.mu_neg + fa.band.sigma_neg >= 0.0;
    fa.diagnostics.pos_inner_vacuous = fa.band.mu_pos - fa.band.sigma_pos <= 0.0;

    std::vector<int> pre_status(fa.tdb.pre.size()), post_status(fa.tdb.post.size());
    for (std::size_t i = 0; i < fa.tdb.pre.size(); ++i) pre_status[i] = classify_status(fa.tdb.pre[i], fa.band);
    for (std::size_t i = 0; i < fa.tdb.post.size(); ++i) post_status[i] = classify_status(fa.tdb.post[i], fa.band);
    fa.status = analyze_runs(std::move(pre_status), std::move(post_status));
    fa.k_affected = affected_intervals(fa.status);
    fa.verdict = follower_verdict(fa.k_affected, T_s, dt);

    fa.ctdb_post.resize(fa.tdb.post.size());
    for (std::size_t i = 0; i < fa.tdb.post.size(); ++i) {
        fa.ctdb_post[i] = compute_ctdb(fa.tdb.post[i], fa.band, &fa.diagnostics);
    }
    fa.w = follower_magnitude(fa.ctdb_post, fa.k_affected);
    return fa;
}

LaneImpactSummary lane_summary(std::span<const FollowerAnalysis> followers, int lane_id, double dt) {
    LaneImpactSummary s;
    s.lane_id = lane_id;
    int n = static_cast<int>(followers.size());
    s.n_followers = n;

    // first i with both i and i+1 unaffected caps the scan at i-1
    int n_a = n;
    for (int i = 1; i <= n - 1; ++i) {
        if (!followers[i - 1].verdict.affected && !followers[i].verdict.affected) {
            n_a = i - 1;
            break;
        }
    }
    s.n_affected_scan = n_a;

    for (int i = 1; i <= n_a; ++i) {
        if (followers[i - 1].verdict.affected) s.W += followers[i - 1].w;
    }

    double max_follower_duration = 0.0;
    int first_affected = 0, last_affected = 0;
    for (int i = 1; i <= n_a; ++i) {
        const auto& f = followers[i - 1];
        if (!f.verdict.affected) continue;
        if (first_affected == 0) first_affected = i;
        last_affected = i;
        max_follower_duration = std::max(max_follower_duration, f.verdict.duration);
    }

    if (first_affected > 0) {
        const auto& fi = followers[first_affected - 1];
        s.t_S = fi.tdb.T_s + fi.k_affected.front() * dt;

        // end anchor is follower N_A; when it is unaffected, fall back to the
        // largest-index affected follower
        const auto& fe = followers[(followers[n_a - 1].verdict.affected ? n_a : last_affected) - 1];
        s.t_E = fe.tdb.T_s + fe.k_affected.back() * dt;

        s.t_last = *s.t_E - *s.t_S;
        s.T = std::max(*s.t_last, max_follower_duration);
    } else {
        s.T = 0.0;
    }
    return s;
}

double global_magnitude(const LaneImpactSummary& target,
                        const std::optional<LaneImpactSummary>& original) {
    return target.W + (original ? original->W : 0.0);
}

}  // namespace lcimpact
