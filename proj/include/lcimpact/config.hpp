#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "lcimpact/newell.hpp"
#include "lcimpact/trajectory.hpp"

namespace lcimpact {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    double dt = 0.5;               // impact bin width, s
    double window_t = 50.0;        // upstream window length, s
    double window_x = 500.0;       // upstream window depth, m
    double smoothing_window = 1.0; // moving-average width for speeds, s
    double eps_lat = 0.1;          // lateral noise threshold, m
    int min_nf = 10;               // minimum pre-maneuver bins per follower
    int follower_cap = 10;         // followers analyzed per lane
    int workers = 1;
    std::vector<int> main_lanes{1, 2};  // driving lane first
    IngestConfig ingest;
    CalibBounds bounds;
    bool svg = false;

    void validate() const;
};

// Plain-text key=value file; '#' starts a comment. Unknown keys are an error.
RunConfig parse_config(const std::string& path);
void apply_config_line(RunConfig& cfg, const std::string& key, const std::string& value);

}  // namespace lcimpact
