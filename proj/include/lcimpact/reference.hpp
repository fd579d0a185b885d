#pragma once

#include <vector>

namespace lcimpact::ref {

// Deliberately naive re-implementation of the status-judgment chain, kept
// free of any code shared with the production path so the two can be
// compared differentially.

struct RefJudgment {
    int omega_star = 0;
    std::vector<int> k_affected;  // 1-based post indices
    bool affected = false;
    double t_start = 0.0;
    double t_end = 0.0;
    double duration = 0.0;
};

RefJudgment judge_statuses(const std::vector<int>& pre, const std::vector<int>& post, double T_s,
                           double dt);

struct RefBand {
    double mu_pos = 0.0, sigma_pos = 0.0, mu_neg = 0.0, sigma_neg = 0.0;
};

struct RefResult {
    RefBand band;
    std::vector<int> pre_status, post_status;
    RefJudgment judgment;
    std::vector<double> ctdb_post;
    double magnitude = 0.0;
};

// Full chain from raw balance series: band, statuses, judgment, corrected
// balances, magnitude.
RefResult quantify(const std::vector<double>& pre_tdb, const std::vector<double>& post_tdb,
                   double T_s, double dt);

}  // namespace lcimpact::ref
