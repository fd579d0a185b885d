#include "lcimpact/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace lcimpact {

namespace {

constexpr int kSchemaVersion = 1;

std::string fmt_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::string fmt_opt(const std::optional<double>& v) {
    return v ? fmt_num(*v) : std::string();
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream f(p);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    return f;
}

json lane_json(const LaneAnalysis& la, bool full) {
    json fl = json::array();
    for (const auto& fa : la.followers) {
        json f;
        f["index"] = fa.index;
        f["vehicle_id"] = fa.vehicle_id;
        f["tau"] = fa.params.tau;
        f["d"] = fa.params.d;
        f["sse"] = fa.params.sse;
        f["flag"] = to_string(fa.params.flag);
        f["T_s"] = fa.tdb.T_s;
        f["n_f"] = static_cast<int>(fa.tdb.pre.size());
        f["n_r"] = static_cast<int>(fa.tdb.post.size());
        f["omega_star"] = fa.status.omega_star;
        f["affected"] = fa.verdict.affected;
        f["t_start"] = fa.verdict.t_start;
        f["t_end"] = fa.verdict.t_end;
        f["duration"] = fa.verdict.duration;
        f["w"] = fa.w;
        f["sign_flips"] = fa.diagnostics.sign_flips;
        f["k_affected"] = fa.k_affected;
        if (full) {
            f["tdb_pre"] = fa.tdb.pre;
            f["tdb_post"] = fa.tdb.post;
            f["ctdb_post"] = fa.ctdb_post;
            f["status_pre"] = fa.status.pre;
            f["status_post"] = fa.status.post;
        }
        fl.push_back(std::move(f));
    }
    json j;
    j["role"] = la.lane_role;
    j["lane_id"] = la.lane_id;
    j["reference"] = la.reference_id;
    j["N"] = la.summary.n_followers;
    j["N_A"] = la.summary.n_affected_scan;
    j["W"] = la.summary.W;
    j["T"] = la.summary.T;
    if (la.summary.t_S) j["t_S"] = *la.summary.t_S;
    if (la.summary.t_E) j["t_E"] = *la.summary.t_E;
    j["dropped"] = la.dropped;
    j["followers"] = std::move(fl);
    return j;
}

json instance_json(const InstanceResult& r, bool full) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["instance_id"] = r.inst.instance_id;
    j["sv_id"] = r.inst.sv_id;
    j["original_lane"] = r.inst.original_lane;
    j["target_lane"] = r.inst.target_lane;
    j["t_lane"] = r.inst.t_lane;
    j["t_sv_s"] = r.inst.t_sv_s;
    j["window"] = {r.inst.window_t0, r.inst.window_t1};
    json lanes = json::array();
    lanes.push_back(lane_json(r.target, full));
    if (r.original) lanes.push_back(lane_json(*r.original, full));
    j["lanes"] = std::move(lanes);
    j["W_global"] = r.W_global;
    return j;
}

LaneRow row_from_lane_json(const std::string& instance_id, const json& lj) {
    LaneRow row;
    row.instance_id = instance_id;
    row.lane = lj.at("role").get<std::string>();
    row.n = lj.at("N").get<int>();
    row.n_a = lj.at("N_A").get<int>();
    row.w = lj.at("W").get<double>();
    row.t = lj.at("T").get<double>();
    if (lj.contains("t_S")) row.t_s = lj.at("t_S").get<double>();
    if (lj.contains("t_E")) row.t_e = lj.at("t_E").get<double>();
    return row;
}

LaneRow row_from_lane(const std::string& instance_id, const LaneAnalysis& la) {
    LaneRow row;
    row.instance_id = instance_id;
    row.lane = la.lane_role;
    row.n = la.summary.n_followers;
    row.n_a = la.summary.n_affected_scan;
    row.w = la.summary.W;
    row.t = la.summary.T;
    row.t_s = la.summary.t_S;
    row.t_e = la.summary.t_E;
    return row;
}

void write_instances_csv(const std::vector<LaneRow>& rows, const fs::path& path) {
    auto f = open_out(path);
    f << "instance_id,lane,N,N_A,W_A,T_A,t_S,t_E\n";
    for (const auto& r : rows) {
        f << r.instance_id << ',' << r.lane << ',' << r.n << ',' << r.n_a << ',' << fmt_num(r.w)
          << ',' << fmt_num(r.t) << ',' << fmt_opt(r.t_s) << ',' << fmt_opt(r.t_e) << '\n';
    }
}

void write_aggregate_csv(const std::vector<LaneRow>& rows, const fs::path& path) {
    auto f = open_out(path);
    f << "lane,count,mean_N,mean_N_A,mean_W,mean_T\n";
    auto emit = [&](const std::string& label, auto pred) {
        long count = 0;
        double sn = 0, sna = 0, sw = 0, st = 0;
        for (const auto& r : rows) {
            if (!pred(r)) continue;
            ++count;
            sn += r.n;
            sna += r.n_a;
            sw += r.w;
            st += r.t;
        }
        f << label << ',' << count;
        if (count > 0) {
            double c = static_cast<double>(count);
            f << ',' << fmt_num(sn / c) << ',' << fmt_num(sna / c) << ',' << fmt_num(sw / c) << ','
              << fmt_num(st / c);
        } else {
            f << ",,,,";
        }
        f << '\n';
    };
    emit("target", [](const LaneRow& r) { return r.lane == "target"; });
    emit("original", [](const LaneRow& r) { return r.lane == "original"; });
    emit("all", [](const LaneRow&) { return true; });
}

std::map<long long, long long> bin_values(const std::vector<double>& values, double width) {
    std::map<long long, long long> bins;
    for (double v : values) {
        long long b = static_cast<long long>(std::floor(v / width));
        ++bins[b];
    }
    return bins;
}

void write_hist_csv(const std::map<long long, long long>& bins, double width,
                    const fs::path& path) {
    auto f = open_out(path);
    f << "value,count\n";
    for (const auto& [b, c] : bins)
        f << fmt_num(static_cast<double>(b) * width) << ',' << c << '\n';
}

void write_hist_svg(const std::map<long long, long long>& bins, double width,
                    const std::string& xlabel, const fs::path& path) {
    const int W = 640, H = 400, ml = 50, mr = 15, mt = 20, mb = 45;
    auto f = open_out(path);
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\">\n";
    f << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    if (!bins.empty()) {
        long long lo = bins.begin()->first, hi = bins.rbegin()->first;
        long long span = hi - lo + 1;
        long long cmax = 1;
        for (const auto& [b, c] : bins) cmax = std::max(cmax, c);
        double bw = static_cast<double>(W - ml - mr) / static_cast<double>(span);
        double hs = static_cast<double>(H - mt - mb) / static_cast<double>(cmax);
        for (const auto& [b, c] : bins) {
            double x = ml + static_cast<double>(b - lo) * bw;
            double h = static_cast<double>(c) * hs;
            f << "<rect x=\"" << fmt_num(x + 1) << "\" y=\"" << fmt_num(H - mb - h) << "\" width=\""
              << fmt_num(std::max(1.0, bw - 2)) << "\" height=\"" << fmt_num(h)
              << "\" fill=\"#4878a8\"/>\n";
            f << "<text x=\"" << fmt_num(x + bw / 2) << "\" y=\"" << H - mb + 15
              << "\" font-size=\"10\" text-anchor=\"middle\">"
              << fmt_num(static_cast<double>(b) * width) << "</text>\n";
        }
        f << "<text x=\"" << ml - 8 << "\" y=\"" << mt + 10
          << "\" font-size=\"10\" text-anchor=\"end\">" << cmax << "</text>\n";
    }
    f << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\""
      << H - mb << "\" stroke=\"black\"/>\n";
    f << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
      << "\" stroke=\"black\"/>\n";
    f << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 8
      << "\" font-size=\"12\" text-anchor=\"middle\">" << xlabel << "</text>\n";
    f << "</svg>\n";
}

void write_tables(const std::vector<LaneRow>& rows, const std::vector<InstanceRow>& inst_rows,
                  const fs::path& dir, const ReportOptions& opts) {
    write_instances_csv(rows, dir / "instances.csv");
    write_aggregate_csv(rows, dir / "aggregate.csv");

    std::vector<double> durations, affected, magnitudes;
    for (const auto& r : inst_rows) {
        durations.push_back(r.duration);
        affected.push_back(static_cast<double>(r.affected));
        magnitudes.push_back(r.magnitude);
    }
    auto hb_dur = bin_values(durations, 1.0);
    auto hb_aff = bin_values(affected, 1.0);
    auto hb_mag = bin_values(magnitudes, 1.0);
    write_hist_csv(hb_dur, 1.0, dir / "hist_duration.csv");
    write_hist_csv(hb_aff, 1.0, dir / "hist_affected.csv");
    write_hist_csv(hb_mag, 1.0, dir / "hist_magnitude.csv");
    if (opts.svg) {
        write_hist_svg(hb_dur, 1.0, "impact duration, s", dir / "hist_duration.svg");
        write_hist_svg(hb_aff, 1.0, "affected followers", dir / "hist_affected.svg");
        write_hist_svg(hb_mag, 1.0, "impact magnitude, m", dir / "hist_magnitude.svg");
    }
}

InstanceRow instance_row(const InstanceResult& r) {
    InstanceRow row;
    row.instance_id = r.inst.instance_id;
    row.duration = r.target.summary.T;
    row.affected = r.target.summary.n_affected_scan;
    if (r.original) {
        row.duration = std::max(row.duration, r.original->summary.T);
        row.affected += r.original->summary.n_affected_scan;
    }
    row.magnitude = r.W_global;
    return row;
}

json manifest_line(const LaneChangeInstance& inst) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["instance_id"] = inst.instance_id;
    j["sv_id"] = inst.sv_id;
    j["original_lane"] = inst.original_lane;
    j["target_lane"] = inst.target_lane;
    j["t_lane"] = inst.t_lane;
    j["t_sv_s"] = inst.t_sv_s;
    j["window_t"] = {inst.window_t0, inst.window_t1};
    j["window_x"] = {inst.window_x0, inst.window_x1};
    j["tlv"] = inst.tlv_id;
    if (inst.lv_id) j["lv"] = *inst.lv_id;
    j["tfv"] = inst.tfv_ids;
    j["fv"] = inst.fv_ids;
    return j;
}

void write_rejections(const std::vector<Rejection>& rejections, const fs::path& dir) {
    auto f = open_out(dir / "rejections.jsonl");
    for (const auto& rej : rejections) {
        json j;
        j["candidate"] = rej.candidate_id;
        j["reason"] = rej.reason;
        f << j.dump() << '\n';
    }
}

}  // namespace

void write_manifest(const std::vector<LaneChangeInstance>& instances,
                    const std::vector<Rejection>& rejections, const std::string& out_dir) {
    fs::path dir(out_dir);
    fs::create_directories(dir);
    auto f = open_out(dir / "manifest.jsonl");
    for (const auto& inst : instances) f << manifest_line(inst).dump() << '\n';
    write_rejections(rejections, dir);
}

std::vector<LaneRow> rows_from_batch(const BatchResult& batch) {
    std::vector<LaneRow> rows;
    for (const auto& r : batch.instances) {
        if (!r.ok) continue;
        rows.push_back(row_from_lane(r.inst.instance_id, r.target));
        if (r.original) rows.push_back(row_from_lane(r.inst.instance_id, *r.original));
    }
    return rows;
}

void write_reports(const BatchResult& batch, const std::string& out_dir,
                   const ReportOptions& opts) {
    fs::path dir(out_dir);
    fs::create_directories(dir);

    {
        auto f = open_out(dir / "manifest.jsonl");
        for (const auto& r : batch.instances) {
            json j = manifest_line(r.inst);
            if (!r.ok) j["error"] = r.error;
            f << j.dump() << '\n';
        }
    }
    write_rejections(batch.rejections, dir);
    {
        auto f = open_out(dir / "calibration.csv");
        f << "instance_id,lane,follower_index,tau,d,sse,flag\n";
        auto emit = [&](const std::string& id, const LaneAnalysis& la) {
            for (size_t i = 0; i < la.params.size(); ++i) {
                const auto& p = la.params[i];
                f << id << ',' << la.lane_role << ',' << i + 1 << ',' << fmt_num(p.tau) << ','
                  << fmt_num(p.d) << ',' << fmt_num(p.sse) << ',' << to_string(p.flag) << '\n';
            }
        };
        for (const auto& r : batch.instances) {
            if (!r.ok) continue;
            emit(r.inst.instance_id, r.target);
            if (r.original) emit(r.inst.instance_id, *r.original);
        }
    }

    std::vector<LaneRow> rows = rows_from_batch(batch);
    std::vector<InstanceRow> inst_rows;
    for (const auto& r : batch.instances)
        if (r.ok) inst_rows.push_back(instance_row(r));
    write_tables(rows, inst_rows, dir, opts);

    fs::create_directories(dir / "instances");
    for (const auto& r : batch.instances) {
        if (!r.ok) continue;
        auto f = open_out(dir / "instances" / (r.inst.instance_id + ".json"));
        f << instance_json(r, opts.full).dump(2) << '\n';
    }
}

void reemit_reports(const std::string& out_dir, const ReportOptions& opts) {
    fs::path dir(out_dir);
    fs::path inst_dir = dir / "instances";
    if (!fs::is_directory(inst_dir))
        throw std::runtime_error("no instance results under " + inst_dir.string() +
                                 " (run analyze first)");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(inst_dir))
        if (e.path().extension() == ".json") files.push_back(e.path());
    if (files.empty())
        throw std::runtime_error("no instance results under " + inst_dir.string() +
                                 " (run analyze first)");
    std::sort(files.begin(), files.end());

    std::vector<LaneRow> rows;
    std::vector<InstanceRow> inst_rows;
    for (const auto& p : files) {
        std::ifstream f(p);
        json j = json::parse(f);
        std::string id = j.at("instance_id").get<std::string>();
        InstanceRow ir;
        ir.instance_id = id;
        ir.magnitude = j.at("W_global").get<double>();
        for (const auto& lj : j.at("lanes")) {
            LaneRow row = row_from_lane_json(id, lj);
            ir.duration = std::max(ir.duration, row.t);
            ir.affected += row.n_a;
            rows.push_back(std::move(row));
        }
        inst_rows.push_back(std::move(ir));
    }
    write_tables(rows, inst_rows, dir, opts);
}

}  // namespace lcimpact
