#include "lcimpact/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace lcimpact {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    size_t b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
}

double to_num(const std::string& key, const std::string& value) {
    try {
        size_t used = 0;
        double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' wants a number, got '" + value + "'");
    }
}

int to_int(const std::string& key, const std::string& value) {
    double v = to_num(key, value);
    double r = std::round(v);
    if (std::abs(v - r) > 1e-9) throw ConfigError("config key '" + key + "' wants an integer");
    return static_cast<int>(r);
}

}  // namespace

void apply_config_line(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "dt") {
        cfg.dt = to_num(key, value);
    } else if (key == "window_t") {
        cfg.window_t = to_num(key, value);
    } else if (key == "window_x") {
        cfg.window_x = to_num(key, value);
    } else if (key == "smoothing_window") {
        cfg.smoothing_window = to_num(key, value);
    } else if (key == "eps_lat") {
        cfg.eps_lat = to_num(key, value);
    } else if (key == "min_nf") {
        cfg.min_nf = to_int(key, value);
    } else if (key == "follower_cap") {
        cfg.follower_cap = to_int(key, value);
    } else if (key == "workers") {
        cfg.workers = to_int(key, value);
    } else if (key == "main_lanes") {
        std::vector<int> lanes;
        std::stringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (!item.empty()) lanes.push_back(to_int(key, item));
        }
        if (lanes.size() != 2 || lanes[0] == lanes[1])
            throw ConfigError("main_lanes wants two distinct lane ids");
        cfg.main_lanes = lanes;
    } else if (key == "speed_unit") {
        if (value == "mps")
            cfg.ingest.speed_unit = SpeedUnit::mps;
        else if (value == "kmh")
            cfg.ingest.speed_unit = SpeedUnit::kmh;
        else
            throw ConfigError("speed_unit must be mps or kmh");
    } else if (key == "kilopost_unit") {
        if (value == "m")
            cfg.ingest.kilopost_unit = KilopostUnit::m;
        else if (value == "km")
            cfg.ingest.kilopost_unit = KilopostUnit::km;
        else
            throw ConfigError("kilopost_unit must be m or km");
    } else if (key == "datetime_format") {
        if (value == "epoch_ms")
            cfg.ingest.datetime_format = DatetimeFormat::epoch_ms;
        else if (value == "iso")
            cfg.ingest.datetime_format = DatetimeFormat::iso;
        else if (value == "seconds")
            cfg.ingest.datetime_format = DatetimeFormat::seconds;
        else
            throw ConfigError("datetime_format must be epoch_ms, iso or seconds");
    } else if (key == "kilopost_origin") {
        cfg.ingest.kilopost_origin = to_num(key, value);
    } else if (key == "max_interp_gap") {
        cfg.ingest.max_interp_gap = to_num(key, value);
    } else if (key == "tau_min") {
        cfg.bounds.tau_min = to_num(key, value);
    } else if (key == "tau_max") {
        cfg.bounds.tau_max = to_num(key, value);
    } else if (key == "d_min") {
        cfg.bounds.d_min = to_num(key, value);
    } else if (key == "d_max") {
        cfg.bounds.d_max = to_num(key, value);
    } else if (key == "svg") {
        cfg.svg = to_int(key, value) != 0;
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

void RunConfig::validate() const {
    if (!(dt > 0.0) || dt < kGridDt - 1e-9)
        throw ConfigError("dt must be at least the trajectory grid step");
    if (window_t <= 0.0 || window_x <= 0.0) throw ConfigError("window sizes must be positive");
    if (smoothing_window < 0.0) throw ConfigError("smoothing_window must be non-negative");
    if (eps_lat <= 0.0) throw ConfigError("eps_lat must be positive");
    if (min_nf < 1) throw ConfigError("min_nf must be at least 1");
    if (follower_cap < 1) throw ConfigError("follower_cap must be at least 1");
    if (workers < 1) throw ConfigError("workers must be at least 1");
    if (ingest.max_interp_gap < kGridDt) throw ConfigError("max_interp_gap below the grid step");
    if (bounds.tau_min <= 0.0 || bounds.tau_max < bounds.tau_min)
        throw ConfigError("wave time bounds are inverted");
    if (bounds.d_min <= 0.0 || bounds.d_max < bounds.d_min)
        throw ConfigError("spacing bounds are inverted");
    if (window_t / dt < min_nf)
        throw ConfigError("window_t too short to ever reach min_nf bins");
}

RunConfig parse_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config " + path);
    RunConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        size_t h = line.find('#');
        if (h != std::string::npos) line = line.substr(0, h);
        std::string s = trim(line);
        if (s.empty()) continue;
        size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + " is not key=value");
        std::string key = trim(s.substr(0, eq));
        std::string value = trim(s.substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + " lacks a key");
        apply_config_line(cfg, key, value);
    }
    cfg.validate();
    return cfg;
}

}  // namespace lcimpact
