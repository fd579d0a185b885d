#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lcimpact/pipeline.hpp"

namespace lcimpact {

struct LaneRow {
    std::string instance_id;
    std::string lane;  // "target" or "original"
    int n = 0;
    int n_a = 0;
    double w = 0.0;
    double t = 0.0;
    std::optional<double> t_s, t_e;
};

struct InstanceRow {
    std::string instance_id;
    double duration = 0.0;   // max lane duration
    int affected = 0;        // affected followers across both lanes
    double magnitude = 0.0;  // combined lane magnitudes
};

std::vector<LaneRow> rows_from_batch(const BatchResult& batch);

struct ReportOptions {
    bool full = false;  // per-instance JSON detail
    bool svg = false;   // histogram bar charts
};

// Extraction products alone: manifest.jsonl and rejections.jsonl.
void write_manifest(const std::vector<LaneChangeInstance>& instances,
                    const std::vector<Rejection>& rejections, const std::string& out_dir);

// Writes manifest.jsonl, rejections.jsonl, calibration.csv, instances.csv,
// aggregate.csv, histogram files and instances/<id>.json under out_dir. With
// opts.full the per-follower JSON additionally carries the TDB/CTDB series.
void write_reports(const BatchResult& batch, const std::string& out_dir,
                   const ReportOptions& opts);

// Rebuilds the table and histogram outputs from previously written
// per-instance JSON files. Throws when none exist.
void reemit_reports(const std::string& out_dir, const ReportOptions& opts);

}  // namespace lcimpact
