#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lcimpact/config.hpp"
#include "lcimpact/extraction.hpp"
#include "lcimpact/impact.hpp"
#include "lcimpact/newell.hpp"
#include "lcimpact/trajectory.hpp"

namespace lcimpact {

struct LaneAnalysis {
    int lane_id = 0;
    std::string lane_role;  // "target" or "original"
    std::string reference_id;
    // every follower that received calibrated parameters, nearest first
    std::vector<std::string> calibrated_ids;
    std::vector<NewellParams> params;  // parallel to calibrated_ids
    // judged prefix of the chain (stops at the first follower without enough
    // usable bins)
    std::vector<FollowerAnalysis> followers;
    LaneImpactSummary summary;
    int dropped = 0;  // followers present in the data but not judged
};

struct InstanceResult {
    LaneChangeInstance inst;
    bool ok = false;
    std::string error;
    LaneAnalysis target;
    std::optional<LaneAnalysis> original;  // absent without an original-lane leader
    double W_global = 0.0;
};

struct BatchResult {
    std::vector<InstanceResult> instances;  // sorted by instance_id
    std::vector<Rejection> rejections;
};

// Smoothing, driving-lane centerline, lateral offsets for every track.
// Throws std::runtime_error when no centerline can be built.
void prepare_dataset(Dataset& data, const RunConfig& cfg);

// Judgment chain for one extracted instance (dataset must be prepared).
InstanceResult analyze_instance(const Dataset& data, const LaneChangeInstance& inst,
                                const RunConfig& cfg);

// prepare + extract + analyze across cfg.workers threads. Results are ordered
// by instance id regardless of the worker count.
BatchResult run_batch(Dataset& data, const RunConfig& cfg);

}  // namespace lcimpact
