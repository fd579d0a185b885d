#include "lcimpact/newell.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lcimpact {

const char* to_string(NewellParams::Flag flag) {
    switch (flag) {
        case NewellParams::Flag::ok: return "ok";
        case NewellParams::Flag::low_confidence: return "low_confidence";
        case NewellParams::Flag::short_range: return "short_range";
        case NewellParams::Flag::fallback: return "fallback";
    }
    return "?";
}

std::vector<double> simulate_newell(const VehicleTrack& leader, double tau, double d,
                                    std::span<const double> eval_times) {
    std::vector<double> out(eval_times.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < eval_times.size(); ++i) {
        if (auto xl = leader.x_at(eval_times[i] - tau)) out[i] = *xl - d;
    }
    return out;
}

namespace {

struct SampleSet {
    std::vector<double> t;
    std::vector<double> x;
};

// Follower grid samples usable for every tau in the box: the leader must
// cover t - tau_max so the sample set (and hence the objective) is identical
// across the whole grid.
SampleSet collect_samples(const VehicleTrack& follower, const VehicleTrack& leader, double t0,
                          double t1, const CalibBounds& b) {
    SampleSet s;
    double lo = std::max({t0, follower.start_time(), leader.start_time() + b.tau_max});
    double hi = std::min({t1, follower.end_time(), leader.end_time()});
    if (hi <= lo) return s;
    for (const auto& p : follower.points) {
        if (p.t < lo - 1e-9) continue;
        if (p.t > hi + 1e-9) break;
        s.t.push_back(p.t);
        s.x.push_back(p.x);
    }
    return s;
}

double objective(const SampleSet& s, const VehicleTrack& leader, double tau, double d) {
    double sse = 0.0;
    for (std::size_t i = 0; i < s.t.size(); ++i) {
        auto xl = leader.x_at(s.t[i] - tau);
        if (!xl) continue;
        double r = s.x[i] - (*xl - d);
        sse += r * r;
    }
    return sse;
}

double clampv(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

}  // namespace

NewellParams calibrate_newell(const VehicleTrack& follower, const VehicleTrack& leader, double t0,
                              double t1, const CalibBounds& b) {
    NewellParams best;
    best.flag = NewellParams::Flag::short_range;
    best.sse = std::numeric_limits<double>::quiet_NaN();

    SampleSet s = collect_samples(follower, leader, t0, t1, b);
    if (s.t.size() < 2 || s.t.back() - s.t.front() < b.min_range) return best;
    if (!follower.covers(s.t.front(), s.t.back()) ||
        !leader.covers(s.t.front() - b.tau_max, s.t.back() - b.tau_min)) {
        return best;
    }

    // Coarse grid. For fixed tau the objective is quadratic in d:
    //   sse(d) = S2 + 2 d S1 + d^2 S0 with r = x_f - x_l(t - tau),
    // so the best grid d is the grid point nearest the clamped vertex.
    best.flag = NewellParams::Flag::ok;
    best.sse = std::numeric_limits<double>::infinity();
    int tau_steps = static_cast<int>(std::round((b.tau_max - b.tau_min) / b.tau_step));
    for (int i = 0; i <= tau_steps; ++i) {
        double tau = b.tau_min + i * b.tau_step;
        double s0 = 0.0, s1 = 0.0, s2 = 0.0;
        for (std::size_t k = 0; k < s.t.size(); ++k) {
            auto xl = leader.x_at(s.t[k] - tau);
            if (!xl) continue;
            double r = s.x[k] - *xl;
            s0 += 1.0;
            s1 += r;
            s2 += r * r;
        }
        if (s0 < 2.0) continue;
        double vertex = clampv(-s1 / s0, b.d_min, b.d_max);
        double d = b.d_min + std::round((vertex - b.d_min) / b.d_step) * b.d_step;
        d = clampv(d, b.d_min, b.d_max);
        double sse = s2 + 2.0 * d * s1 + d * d * s0;
        if (sse < best.sse) {
            best.tau = tau;
            best.d = d;
            best.sse = sse;
        }
    }
    if (!std::isfinite(best.sse)) {
        best.flag = NewellParams::Flag::short_range;
        best.sse = std::numeric_limits<double>::quiet_NaN();
        return best;
    }

    // Nelder-Mead refinement clamped to the box, never worse than the grid.
    struct Vert {
        double tau, d, f;
    };
    auto eval = [&](double tau, double d) {
        return objective(s, leader, clampv(tau, b.tau_min, b.tau_max), clampv(d, b.d_min, b.d_max));
    };
    std::vector<Vert> simplex = {
        {best.tau, best.d, best.sse},
        {clampv(best.tau + b.tau_step, b.tau_min, b.tau_max), best.d, 0.0},
        {best.tau, clampv(best.d + b.d_step, b.d_min, b.d_max), 0.0},
    };
    simplex[1].f = eval(simplex[1].tau, simplex[1].d);
    simplex[2].f = eval(simplex[2].tau, simplex[2].d);

    for (int iter = 0; iter < 120; ++iter) {
        std::sort(simplex.begin(), simplex.end(), [](const Vert& a, const Vert& v) { return a.f < v.f; });
        double size = std::max(std::abs(simplex[0].tau - simplex[2].tau) + std::abs(simplex[0].d - simplex[2].d),
                               std::abs(simplex[0].tau - simplex[1].tau) + std::abs(simplex[0].d - simplex[1].d));
        if (size < 1e-7) break;
        double ctau = (simplex[0].tau + simplex[1].tau) / 2.0;
        double cd = (simplex[0].d + simplex[1].d) / 2.0;

        auto make = [&](double coef) {
            Vert v;
            v.tau = clampv(ctau + coef * (ctau - simplex[2].tau), b.tau_min, b.tau_max);
            v.d = clampv(cd + coef * (cd - simplex[2].d), b.d_min, b.d_max);
            v.f = eval(v.tau, v.d);
            return v;
        };
        Vert refl = make(1.0);
        if (refl.f < simplex[0].f) {
            Vert expd = make(2.0);
            simplex[2] = expd.f < refl.f ? expd : refl;
        } else if (refl.f < simplex[1].f) {
            simplex[2] = refl;
        } else {
            Vert contr = make(refl.f < simplex[2].f ? 0.5 : -0.5);
            if (contr.f < std::min(refl.f, simplex[2].f)) {
                simplex[2] = contr;
            } else {
                for (int k = 1; k < 3; ++k) {
                    simplex[k].tau = (simplex[k].tau + simplex[0].tau) / 2.0;
                    simplex[k].d = (simplex[k].d + simplex[0].d) / 2.0;
                    simplex[k].f = eval(simplex[k].tau, simplex[k].d);
                }
            }
        }
    }
    for (const auto& v : simplex) {
        if (v.f < best.sse) {
            best.tau = v.tau;
            best.d = v.d;
            best.sse = v.f;
        }
    }

    // Degenerate geometry: leader barely moves while the follower does.
    double leader_span = 0.0, follower_span = 0.0;
    if (auto a = leader.x_at(s.t.front() - best.tau)) {
        if (auto z = leader.x_at(s.t.back() - best.tau)) leader_span = std::abs(*z - *a);
    }
    follower_span = std::abs(s.x.back() - s.x.front());
    if (leader_span < 1.0 && follower_span > 1.0) best.flag = NewellParams::Flag::low_confidence;

    return best;
}

DemarcationSchedule demarcation_times(double t_sv_s, std::span<const NewellParams> params) {
    DemarcationSchedule sched;
    sched.t0 = t_sv_s;
    double t = t_sv_s;
    for (const auto& p : params) {
        t += p.tau;
        sched.times.push_back(t);
    }
    return sched;
}

ChainResult calibrate_chain(const std::vector<const VehicleTrack*>& chain, double t_sv_s,
                            const ChainOptions& opts, std::vector<double>& tau_pool) {
    ChainResult res;
    res.schedule.t0 = t_sv_s;
    if (chain.size() < 2) return res;

    auto pool_median = [&]() {
        if (tau_pool.empty()) return opts.fallback_tau;
        std::vector<double> v = tau_pool;
        std::sort(v.begin(), v.end());
        std::size_t n = v.size();
        return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };

    double t_prev = t_sv_s;
    for (std::size_t j = 1; j < chain.size(); ++j) {
        const VehicleTrack& leader = *chain[j - 1];
        const VehicleTrack& follower = *chain[j];

        NewellParams p = calibrate_newell(follower, leader, opts.window_start, t_prev, opts.bounds);
        if (p.flag == NewellParams::Flag::ok) {
            // one fixed-point pass: extend the pre-arrival range by the
            // provisional tau and refit
            NewellParams p2 =
                calibrate_newell(follower, leader, opts.window_start, t_prev + p.tau, opts.bounds);
            if (p2.flag != NewellParams::Flag::short_range) p = p2;
        }

        if (p.flag == NewellParams::Flag::ok) {
            tau_pool.push_back(p.tau);
        } else {
            p.tau = pool_median();
            p.flag = NewellParams::Flag::fallback;
        }

        double t_j = t_prev + p.tau;
        if (t_j > opts.window_end) {
            res.truncated = static_cast<int>(chain.size() - j);
            break;
        }
        res.params.push_back(p);
        res.schedule.times.push_back(t_j);
        t_prev = t_j;
    }
    return res;
}

}  // namespace lcimpact
