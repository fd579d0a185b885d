#include "lcimpact/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "lcimpact/geometry.hpp"

namespace lcimpact {

void prepare_dataset(Dataset& data, const RunConfig& cfg) {
    smooth_speeds(data, cfg.smoothing_window);
    int driving = cfg.main_lanes[0];
    int passing = cfg.main_lanes[1];
    LaneCenterline center = build_centerline(data, driving);
    LocalProjection proj = LocalProjection::for_dataset(data);
    double side = detect_side_sign(data, center, proj, passing).value_or(1.0);
    for (auto& [id, track] : data.tracks) lateral_offsets(track, center, proj, side);
}

namespace {

LaneAnalysis analyze_lane(const Dataset& data, const LaneChangeInstance& inst,
                          const VehicleTrack& reference, const std::vector<std::string>& follower_ids,
                          int lane_id, const char* role, const RunConfig& cfg,
                          std::vector<double>& tau_pool) {
    LaneAnalysis la;
    la.lane_id = lane_id;
    la.lane_role = role;
    la.reference_id = reference.vehicle_id;

    std::vector<const VehicleTrack*> chain{&reference};
    for (const auto& id : follower_ids) chain.push_back(&data.tracks.at(id));

    ChainOptions opts;
    opts.bounds = cfg.bounds;
    opts.window_start = inst.window_t0;
    opts.window_end = inst.window_t1;
    ChainResult cr = calibrate_chain(chain, inst.t_sv_s, opts, tau_pool);

    la.params = cr.params;
    for (size_t i = 0; i < cr.params.size(); ++i) la.calibrated_ids.push_back(follower_ids[i]);
    la.dropped = cr.truncated;

    for (size_t i = 0; i < cr.params.size(); ++i) {
        const VehicleTrack& f = *chain[i + 1];
        double T_s = cr.schedule.times[i];
        double T_lb = std::max({inst.window_t0, f.start_time(), reference.start_time()});
        double T_ub = std::min({inst.window_t1, f.end_time(), reference.end_time()});
        int n_f = static_cast<int>(std::floor((T_s - T_lb) / cfg.dt + 1e-9));
        if (n_f < cfg.min_nf) {
            la.dropped += static_cast<int>(cr.params.size() - i);
            break;
        }
        auto fa = analyze_follower(f, reference, cr.params[i], T_s, T_lb, T_ub, cfg.dt);
        if (!fa) {
            la.dropped += static_cast<int>(cr.params.size() - i);
            break;
        }
        fa->index = static_cast<int>(i) + 1;
        fa->vehicle_id = f.vehicle_id;
        la.followers.push_back(std::move(*fa));
    }

    la.summary = lane_summary(la.followers, lane_id, cfg.dt);
    return la;
}

}  // namespace

InstanceResult analyze_instance(const Dataset& data, const LaneChangeInstance& inst,
                                const RunConfig& cfg) {
    InstanceResult r;
    r.inst = inst;
    try {
        std::vector<double> tau_pool;
        const VehicleTrack& tlv = data.tracks.at(inst.tlv_id);
        r.target = analyze_lane(data, inst, tlv, inst.tfv_ids, inst.target_lane, "target", cfg,
                                tau_pool);
        if (inst.lv_id && !inst.fv_ids.empty()) {
            const VehicleTrack& lv = data.tracks.at(*inst.lv_id);
            r.original = analyze_lane(data, inst, lv, inst.fv_ids, inst.original_lane, "original",
                                      cfg, tau_pool);
        }
        std::optional<LaneImpactSummary> orig_summary;
        if (r.original) orig_summary = r.original->summary;
        r.W_global = global_magnitude(r.target.summary, orig_summary);
        r.ok = true;
    } catch (const std::exception& e) {
        r.ok = false;
        r.error = e.what();
    }
    return r;
}

BatchResult run_batch(Dataset& data, const RunConfig& cfg) {
    prepare_dataset(data, cfg);

    ExtractionConfig ecfg;
    ecfg.main_lanes = cfg.main_lanes;
    ecfg.window_t = cfg.window_t;
    ecfg.window_x = cfg.window_x;
    ecfg.eps_lat = cfg.eps_lat;
    ecfg.follower_cap = cfg.follower_cap;
    ExtractionResult ex = extract_instances(data, ecfg);

    std::sort(ex.instances.begin(), ex.instances.end(),
              [](const LaneChangeInstance& a, const LaneChangeInstance& b) {
                  return a.instance_id < b.instance_id;
              });

    BatchResult batch;
    batch.rejections = std::move(ex.rejections);
    batch.instances.resize(ex.instances.size());

    size_t n = ex.instances.size();
    unsigned workers = static_cast<unsigned>(std::max(1, cfg.workers));
    workers = std::min<unsigned>(workers, std::max<size_t>(n, 1));

    std::atomic<size_t> next{0};
    auto work = [&]() {
        while (true) {
            size_t i = next.fetch_add(1);
            if (i >= n) break;
            batch.instances[i] = analyze_instance(data, ex.instances[i], cfg);
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
    return batch;
}

}  // namespace lcimpact
