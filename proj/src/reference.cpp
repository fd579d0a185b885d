#include "lcimpact/reference.hpp"

#include <algorithm>
#include <cmath>

namespace lcimpact::ref {

namespace {

// run length of consecutive ones around position i (0-based)
int run_length_through(const std::vector<int>& v, int i) {
    if (v[i] != 1) return 0;
    int a = i, b = i;
    while (a - 1 >= 0 && v[a - 1] == 1) --a;
    while (b + 1 < static_cast<int>(v.size()) && v[b + 1] == 1) ++b;
    return b - a + 1;
}

}  // namespace

RefJudgment judge_statuses(const std::vector<int>& pre, const std::vector<int>& post, double T_s,
                           double dt) {
    RefJudgment j;
    for (int i = 0; i < static_cast<int>(pre.size()); ++i) {
        j.omega_star = std::max(j.omega_star, run_length_through(pre, i));
    }
    for (int i = 0; i < static_cast<int>(post.size()); ++i) {
        if (run_length_through(post, i) > j.omega_star) j.k_affected.push_back(i + 1);
    }
    j.affected = !j.k_affected.empty();
    if (j.affected) {
        int kmin = j.k_affected.front(), kmax = j.k_affected.front();
        for (int k : j.k_affected) {
            kmin = std::min(kmin, k);
            kmax = std::max(kmax, k);
        }
        j.t_start = T_s + (kmin - 1) * dt;
        j.t_end = T_s + kmax * dt;
        j.duration = j.t_end - j.t_start;
    }
    return j;
}

RefResult quantify(const std::vector<double>& pre_tdb, const std::vector<double>& post_tdb,
                   double T_s, double dt) {
    RefResult r;

    double sp = 0.0, sn = 0.0;
    int np = 0, nn = 0;
    for (double v : pre_tdb) {
        if (v >= 0.0) {
            sp += v;
            ++np;
        } else {
            sn += v;
            ++nn;
        }
    }
    if (np > 0) r.band.mu_pos = sp / np;
    if (nn > 0) r.band.mu_neg = sn / nn;
    double vp = 0.0, vn = 0.0;
    for (double v : pre_tdb) {
        if (v >= 0.0) {
            vp += (v - r.band.mu_pos) * (v - r.band.mu_pos);
        } else {
            vn += (v - r.band.mu_neg) * (v - r.band.mu_neg);
        }
    }
    if (np > 0) r.band.sigma_pos = std::sqrt(vp / np);
    if (nn > 0) r.band.sigma_neg = std::sqrt(vn / nn);

    auto status_of = [&](double v) {
        if (v >= 0.0) {
            bool inside = v >= r.band.mu_pos - r.band.sigma_pos && v <= r.band.mu_pos + r.band.sigma_pos;
            return inside ? 0 : 1;
        }
        bool inside = v >= r.band.mu_neg - r.band.sigma_neg && v <= r.band.mu_neg + r.band.sigma_neg;
        return inside ? 0 : 1;
    };
    for (double v : pre_tdb) r.pre_status.push_back(status_of(v));
    for (double v : post_tdb) r.post_status.push_back(status_of(v));

    r.judgment = judge_statuses(r.pre_status, r.post_status, T_s, dt);

    for (double v : post_tdb) {
        double corrected;
        if (v < r.band.mu_neg - r.band.sigma_neg) {
            corrected = v - (r.band.mu_neg - r.band.sigma_neg);
        } else if (v > r.band.mu_neg + r.band.sigma_neg && v < 0.0) {
            corrected = v - (r.band.mu_neg + r.band.sigma_neg);
        } else if (v > 0.0 && v < r.band.mu_pos - r.band.sigma_pos) {
            corrected = v - (r.band.mu_pos - r.band.sigma_pos);
        } else if (v > r.band.mu_pos + r.band.sigma_pos) {
            corrected = v - (r.band.mu_pos + r.band.sigma_pos);
        } else {
            corrected = 0.0;
        }
        r.ctdb_post.push_back(corrected);
    }
    for (int k : r.judgment.k_affected) r.magnitude += r.ctdb_post[k - 1];
    return r;
}

}  // namespace lcimpact::ref
