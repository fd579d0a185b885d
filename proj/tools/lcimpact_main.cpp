#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>

#include "CLI11.hpp"
#include "lcimpact/config.hpp"
#include "lcimpact/pipeline.hpp"
#include "lcimpact/report.hpp"
#include "lcimpact/synth.hpp"
#include "lcimpact/trajectory.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitConfig = 2;
constexpr int kExitEmpty = 3;

struct Options {
    std::string input;
    std::string out;
    std::string config;
    double dt = 0.0;      // 0 = keep config value
    int workers = 0;      // 0 = keep config value
    long seed = -1;       // -1 = keep scenario value
    bool full = false;
    bool svg = false;
    bool strict = false;
};

lcimpact::RunConfig load_config(const Options& opt) {
    lcimpact::RunConfig cfg;
    if (!opt.config.empty()) cfg = lcimpact::parse_config(opt.config);
    if (opt.dt > 0.0) cfg.dt = opt.dt;
    if (opt.workers > 0) cfg.workers = opt.workers;
    if (opt.svg) cfg.svg = true;
    cfg.validate();
    return cfg;
}

int cmd_ingest(const Options& opt) {
    lcimpact::RunConfig cfg = load_config(opt);
    lcimpact::Dataset data = lcimpact::parse_dataset(opt.input, cfg.ingest);
    size_t points = 0, gaps = 0;
    for (const auto& [id, tr] : data.tracks) {
        points += tr.points.size();
        gaps += tr.gaps.size();
    }
    lcimpact::serialize_dataset(data, opt.out);
    std::printf("ingest: %zu vehicles, %zu points, %zu gaps -> %s\n", data.tracks.size(), points,
                gaps, opt.out.c_str());
    return kExitOk;
}

int cmd_extract(const Options& opt) {
    lcimpact::RunConfig cfg = load_config(opt);
    lcimpact::Dataset data = lcimpact::parse_dataset(opt.input, cfg.ingest);
    lcimpact::prepare_dataset(data, cfg);
    lcimpact::ExtractionConfig ecfg;
    ecfg.main_lanes = cfg.main_lanes;
    ecfg.window_t = cfg.window_t;
    ecfg.window_x = cfg.window_x;
    ecfg.eps_lat = cfg.eps_lat;
    ecfg.follower_cap = cfg.follower_cap;
    lcimpact::ExtractionResult ex = lcimpact::extract_instances(data, ecfg);
    lcimpact::write_manifest(ex.instances, ex.rejections, opt.out);
    std::printf("extract: %zu instances, %zu rejections -> %s\n", ex.instances.size(),
                ex.rejections.size(), opt.out.c_str());
    if (ex.instances.empty() && opt.strict) {
        std::fprintf(stderr, "no instances extracted\n");
        return kExitEmpty;
    }
    return kExitOk;
}

int cmd_analyze(const Options& opt) {
    lcimpact::RunConfig cfg = load_config(opt);
    lcimpact::Dataset data = lcimpact::parse_dataset(opt.input, cfg.ingest);
    lcimpact::BatchResult batch = lcimpact::run_batch(data, cfg);
    lcimpact::ReportOptions ropt;
    ropt.full = opt.full;
    ropt.svg = cfg.svg;
    lcimpact::write_reports(batch, opt.out, ropt);
    size_t ok = 0;
    for (const auto& r : batch.instances)
        if (r.ok) ++ok;
    std::printf("analyze: %zu instances (%zu analyzed), %zu rejections -> %s\n",
                batch.instances.size(), ok, batch.rejections.size(), opt.out.c_str());
    if (ok == 0 && opt.strict) {
        std::fprintf(stderr, "no instances analyzed\n");
        return kExitEmpty;
    }
    return kExitOk;
}

int cmd_synth(const Options& opt) {
    lcimpact::ScenarioSpec spec = lcimpact::parse_scenario(opt.input);
    if (opt.seed >= 0) spec.seed = static_cast<unsigned>(opt.seed);
    lcimpact::Dataset baseline = lcimpact::generate_platoon(spec);
    lcimpact::InjectionResult res = lcimpact::inject_lane_change(baseline, spec);
    std::filesystem::create_directories(opt.out);
    lcimpact::write_csv(baseline, spec, opt.out + "/baseline.csv");
    lcimpact::write_csv(res.data, spec, opt.out + "/dataset.csv");
    lcimpact::write_ground_truth(res.truth, opt.out + "/ground_truth.json");
    std::printf("synth: %zu vehicles, seed %u -> %s\n", res.data.tracks.size(), spec.seed,
                opt.out.c_str());
    return kExitOk;
}

int cmd_report(const Options& opt) {
    lcimpact::ReportOptions ropt;
    ropt.full = opt.full;
    ropt.svg = opt.svg;
    lcimpact::reemit_reports(opt.out, ropt);
    std::printf("report: tables rebuilt under %s\n", opt.out.c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"upstream impact of discretionary lane changes from trajectory data"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&](CLI::App* cmd, bool needs_input) {
        if (needs_input)
            cmd->add_option("--input", opt.input, "input file")->required();
        cmd->add_option("--out", opt.out, "output path")->required();
        cmd->add_option("--config", opt.config, "key=value run configuration");
        return cmd;
    };

    auto* ingest = add_common(app.add_subcommand("ingest", "validate and normalize a CSV"), true);
    (void)ingest;
    auto* extract =
        add_common(app.add_subcommand("extract", "emit the instance manifest"), true);
    extract->add_flag("--strict", opt.strict, "treat an empty result as an error");
    auto* analyze = add_common(app.add_subcommand("analyze", "run the full pipeline"), true);
    analyze->add_option("--dt", opt.dt, "impact bin width, seconds");
    analyze->add_option("--workers", opt.workers, "parallel instance workers");
    analyze->add_flag("--full", opt.full, "include TDB/CTDB series in instance JSON");
    analyze->add_flag("--svg", opt.svg, "render histogram bar charts");
    analyze->add_flag("--strict", opt.strict, "treat an empty result as an error");
    auto* synth = add_common(app.add_subcommand("synth", "generate a synthetic scenario"), true);
    synth->add_option("--seed", opt.seed, "override the scenario seed");
    auto* report =
        add_common(app.add_subcommand("report", "re-emit tables from stored results"), false);
    report->add_flag("--full", opt.full, "keep full series in rebuilt outputs");
    report->add_flag("--svg", opt.svg, "render histogram bar charts");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("ingest")) return cmd_ingest(opt);
        if (app.got_subcommand("extract")) return cmd_extract(opt);
        if (app.got_subcommand("analyze")) return cmd_analyze(opt);
        if (app.got_subcommand("synth")) return cmd_synth(opt);
        if (app.got_subcommand("report")) return cmd_report(opt);
    } catch (const lcimpact::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInput;
    }
    return kExitOk;
}
