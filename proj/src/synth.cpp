#include "lcimpact/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "lcimpact/geometry.hpp"

namespace lcimpact {

namespace {

constexpr double kPi = 3.14159265358979323846;
// re-simulated positions this close to the baseline are snapped onto it so
// that undisturbed followers stay bit-identical
constexpr double kSnapTol = 1e-6;
// braking limit for the relaxation after a cut-in; without it the spacing
// constraint would demand an instantaneous backward jump
constexpr double kMaxDecel = 3.5;  // m/s^2

double profile_speed(const std::vector<SpeedProfilePoint>& p, double t) {
    if (p.empty()) throw std::runtime_error("empty speed profile");
    if (t <= p.front().t) return p.front().v;
    if (t >= p.back().t) return p.back().v;
    for (size_t i = 1; i < p.size(); ++i) {
        if (t <= p[i].t) {
            double f = (t - p[i - 1].t) / (p[i].t - p[i - 1].t);
            return p[i - 1].v + f * (p[i].v - p[i - 1].v);
        }
    }
    return p.back().v;
}

// exact distance travelled between a and b under the piecewise-linear profile:
// the speed is linear between consecutive knots, so trapezoids are exact
double profile_distance(const std::vector<SpeedProfilePoint>& p, double a, double b) {
    if (a > b) return -profile_distance(p, b, a);
    double total = 0.0;
    double cur = a;
    for (const auto& q : p) {
        if (q.t <= cur) continue;
        if (q.t >= b) break;
        total += 0.5 * (profile_speed(p, cur) + profile_speed(p, q.t)) * (q.t - cur);
        cur = q.t;
    }
    total += 0.5 * (profile_speed(p, cur) + profile_speed(p, b)) * (b - cur);
    return total;
}

double max_profile_speed(const std::vector<SpeedProfilePoint>& p) {
    double m = 0.0;
    for (const auto& q : p) m = std::max(m, q.v);
    return m;
}

struct RoadFrame {
    LocalProjection proj;
    double de, dn;  // unit travel direction (east, north)
    double ne, nn;  // unit left normal

    static RoadFrame make(const ScenarioSpec& spec) {
        RoadFrame f;
        f.proj = LocalProjection::at(spec.anchor_lat, spec.anchor_lon);
        double b = spec.bearing_deg * kPi / 180.0;
        f.de = std::sin(b);
        f.dn = std::cos(b);
        f.ne = -f.dn;
        f.nn = f.de;
        return f;
    }

    void to_geo(double x, double y, double& lat, double& lon) const {
        double e = de * x + ne * y;
        double n = dn * x + nn * y;
        proj.to_geo(e, n, lat, lon);
    }

    double lateral_of(double lat, double lon) const {
        double e, n;
        proj.to_local(lat, lon, e, n);
        return e * ne + n * nn;
    }
};

struct LaneLayout {
    std::vector<double> shift;   // cumulative wave lag per vehicle
    std::vector<double> offset;  // cumulative spacing per vehicle
};

LaneLayout lane_layout(const std::vector<SynthVehicle>& lane) {
    LaneLayout l;
    double s = 0.0, o = 0.0;
    for (size_t j = 0; j < lane.size(); ++j) {
        if (j > 0) {
            s += lane[j].tau;
            o += lane[j].d + lane[j].extra_gap;
        }
        l.shift.push_back(s);
        l.offset.push_back(o);
    }
    return l;
}

std::string vehicle_name(const ScenarioSpec& spec, int lane_ordinal, size_t j) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%c%02zu", lane_ordinal == 0 ? 'A' : 'B', j + 1);
    return spec.id_prefix + buf;
}

std::mt19937 vehicle_rng(const ScenarioSpec& spec, int lane_ordinal, size_t j) {
    std::seed_seq seq{spec.seed, static_cast<unsigned>(lane_ordinal + 1),
                      static_cast<unsigned>(j + 1)};
    return std::mt19937(seq);
}

double solve_target_anchor(const ScenarioSpec& spec, const LaneLayout& orig,
                           const LaneLayout& targ) {
    // place the target platoon so that at the crossing instant the SV sits at
    // gap_fraction of the way from the new follower up to the new leader
    double tc = spec.insertion_time + 0.5 * spec.lateral_ramp;
    size_t p = static_cast<size_t>(spec.sv_index);
    size_t g = static_cast<size_t>(spec.target_gap_index);
    double x_sv = spec.x0 + profile_distance(spec.lead_profile, spec.t_begin, tc - orig.shift[p]) -
                  orig.offset[p];
    double lead_rel = profile_distance(spec.lead_profile, spec.t_begin, tc - targ.shift[g]) -
                      targ.offset[g];
    double foll_rel = profile_distance(spec.lead_profile, spec.t_begin, tc - targ.shift[g + 1]) -
                      targ.offset[g + 1];
    double f = spec.gap_fraction;
    return x_sv - ((1.0 - f) * foll_rel + f * lead_rel);
}

void validate(const ScenarioSpec& spec) {
    if (spec.duration <= 1.0) throw std::runtime_error("scenario duration too short");
    if (spec.lead_profile.empty()) throw std::runtime_error("scenario needs a speed profile");
    for (size_t i = 1; i < spec.lead_profile.size(); ++i)
        if (spec.lead_profile[i].t <= spec.lead_profile[i - 1].t)
            throw std::runtime_error("speed profile times must increase");
    if (spec.original_lane.size() < 2 || spec.target_lane.size() < 2)
        throw std::runtime_error("each lane needs at least two vehicles");
    auto check_lane = [](const std::vector<SynthVehicle>& lane) {
        for (const auto& v : lane) {
            if (v.tau < kGridDt || v.tau > 10.0) throw std::runtime_error("vehicle tau out of range");
            if (v.d <= 0.0) throw std::runtime_error("vehicle spacing must be positive");
        }
    };
    check_lane(spec.original_lane);
    check_lane(spec.target_lane);
    if (spec.inject) {
        if (spec.sv_index < 0 || spec.sv_index >= static_cast<int>(spec.original_lane.size()))
            throw std::runtime_error("sv_index outside the original lane");
        if (spec.target_gap_index < 0 ||
            spec.target_gap_index + 1 >= static_cast<int>(spec.target_lane.size()))
            throw std::runtime_error("target_gap_index needs a leader and a follower");
        double margin = spec.insertion_time - spec.t_begin;
        if (margin < 12.0)
            throw std::runtime_error("insertion must leave room for the pre-maneuver history");
        if (spec.insertion_time + spec.lateral_ramp >= spec.t_begin + spec.duration)
            throw std::runtime_error("insertion happens after the episode ends");
        if (spec.gap_fraction <= 0.0 || spec.gap_fraction >= 1.0)
            throw std::runtime_error("gap_fraction must be strictly between 0 and 1");
        if (spec.lateral_ramp < 0.5) throw std::runtime_error("lateral ramp too short");
    }
}

}  // namespace

std::string ScenarioSpec::sv_vehicle_id() const {
    return vehicle_name(*this, 0, static_cast<size_t>(sv_index));
}

Dataset generate_platoon(const ScenarioSpec& spec) {
    validate(spec);
    RoadFrame frame = RoadFrame::make(spec);
    LaneLayout orig = lane_layout(spec.original_lane);
    LaneLayout targ = lane_layout(spec.target_lane);
    double anchor_target =
        spec.inject ? solve_target_anchor(spec, orig, targ) : spec.x0_target;

    size_t n = static_cast<size_t>(std::llround(spec.duration / kGridDt));
    Dataset data;
    data.kilopost_origin = spec.kilopost_origin;

    for (int lane_ord = 0; lane_ord < 2; ++lane_ord) {
        const auto& lane = lane_ord == 0 ? spec.original_lane : spec.target_lane;
        const auto& lay = lane_ord == 0 ? orig : targ;
        double anchor = lane_ord == 0 ? spec.x0 : anchor_target;
        int lane_id = lane_ord == 0 ? spec.original_lane_id : spec.target_lane_id;
        double lane_y = lane_ord == 0 ? 0.0 : spec.lane_width;

        for (size_t j = 0; j < lane.size(); ++j) {
            VehicleTrack tr;
            tr.vehicle_id = vehicle_name(spec, lane_ord, j);
            tr.vehicle_type = "car";
            tr.points.reserve(n);
            auto rng = vehicle_rng(spec, lane_ord, j);
            std::normal_distribution<double> jitter(0.0, spec.jitter_sigma);
            std::normal_distribution<double> noise(0.0, spec.noise_sigma);
            for (size_t k = 0; k < n; ++k) {
                double t = spec.t_begin + static_cast<double>(k) * kGridDt;
                double ts = t - lay.shift[j];
                double x = anchor + profile_distance(spec.lead_profile, spec.t_begin, ts) -
                           lay.offset[j];
                double v = profile_speed(spec.lead_profile, ts);
                double y = lane_y + (spec.jitter_sigma > 0.0 ? jitter(rng) : 0.0);
                if (spec.noise_sigma > 0.0) x += noise(rng);
                TrajectoryPoint pt;
                pt.t = t;
                pt.x = x;
                pt.speed = v;
                pt.lane_id = lane_id;
                frame.to_geo(x, y, pt.lat, pt.lon);
                tr.points.push_back(pt);
            }
            data.tracks.emplace(tr.vehicle_id, std::move(tr));
        }
    }
    return data;
}

namespace {

double interp_grid(const std::vector<double>& xs, double t0, double tq) {
    double pos = (tq - t0) / kGridDt;
    if (pos <= 0.0) return xs.front();
    size_t last = xs.size() - 1;
    if (pos >= static_cast<double>(last)) return xs.back();
    size_t i = static_cast<size_t>(pos);
    double f = pos - static_cast<double>(i);
    return xs[i] * (1.0 - f) + xs[i + 1] * f;
}

struct ResimVehicle {
    VehicleTrack* track = nullptr;
    double tau = 1.0;
    double d = 5.0;
};

// Re-simulate a chain of followers behind a (possibly null) leader series
// from index k0 on. Positions relax toward min(free flow, leader - d).
void resim_chain(std::vector<ResimVehicle>& chain, const std::vector<double>* leader_x,
                 double t0, size_t k0, double v_des, const RoadFrame& frame) {
    const std::vector<double>* lead = leader_x;
    std::vector<double> lead_store;
    for (auto& rv : chain) {
        VehicleTrack& tr = *rv.track;
        size_t n = tr.points.size();
        std::vector<double> x_base(n), x_new(n);
        for (size_t k = 0; k < n; ++k) x_base[k] = tr.points[k].x;
        x_new = x_base;
        std::vector<bool> changed(n, false);
        for (size_t k = k0; k < n; ++k) {
            double t = tr.points[k].t;
            double tq = t - rv.tau;
            double free_pos = interp_grid(x_new, t0, tq) + v_des * rv.tau;
            double pos = free_pos;
            if (lead) pos = std::min(pos, interp_grid(*lead, t0, tq) - rv.d);
            if (k >= 2) {
                // a cut-in can demand a spacing the follower does not have yet;
                // it brakes at kMaxDecel until the constraint becomes feasible
                double v_prev = (x_new[k - 1] - x_new[k - 2]) / kGridDt;
                double floor_pos =
                    x_new[k - 1] + std::max(0.0, v_prev - kMaxDecel * kGridDt) * kGridDt;
                pos = std::max(pos, floor_pos);
            }
            if (std::abs(pos - x_base[k]) < kSnapTol) pos = x_base[k];
            x_new[k] = pos;
            changed[k] = pos != x_base[k];
        }
        bool any = std::find(changed.begin(), changed.end(), true) != changed.end();
        if (any) {
            for (size_t k = 0; k < n; ++k) {
                if (!changed[k]) continue;
                double y = frame.lateral_of(tr.points[k].lat, tr.points[k].lon);
                tr.points[k].x = x_new[k];
                frame.to_geo(x_new[k], y, tr.points[k].lat, tr.points[k].lon);
            }
            // refresh speeds wherever a neighbouring position moved; untouched
            // stretches keep their analytic values
            for (size_t k = 0; k < n; ++k) {
                bool near_change = changed[k] || (k > 0 && changed[k - 1]) ||
                                   (k + 1 < n && changed[k + 1]);
                if (!near_change) continue;
                if (k == 0)
                    tr.points[k].speed = (x_new[1] - x_new[0]) / kGridDt;
                else if (k + 1 == n)
                    tr.points[k].speed = (x_new[n - 1] - x_new[n - 2]) / kGridDt;
                else
                    tr.points[k].speed = (x_new[k + 1] - x_new[k - 1]) / (2.0 * kGridDt);
            }
        }
        lead_store = std::move(x_new);
        lead = &lead_store;
    }
}

}  // namespace

InjectionResult inject_lane_change(const Dataset& baseline, const ScenarioSpec& spec) {
    InjectionResult out;
    out.data = baseline;
    out.truth.sv_id = spec.sv_vehicle_id();
    out.truth.original_lane = spec.original_lane_id;
    out.truth.target_lane = spec.target_lane_id;
    if (!spec.inject) return out;
    validate(spec);

    RoadFrame frame = RoadFrame::make(spec);
    size_t p = static_cast<size_t>(spec.sv_index);
    size_t g = static_cast<size_t>(spec.target_gap_index);

    VehicleTrack& sv = out.data.tracks.at(out.truth.sv_id);
    double tc = spec.insertion_time;
    out.truth.t_maneuver = tc;

    // lateral ramp, lane flip at the half-width crossing
    double t_cross = 0.0;
    for (auto& pt : sv.points) {
        if (pt.t < tc) continue;
        double frac = std::min(1.0, (pt.t - tc) / spec.lateral_ramp);
        double y = frame.lateral_of(pt.lat, pt.lon) + frac * spec.lane_width;
        frame.to_geo(pt.x, y, pt.lat, pt.lon);
        if (frac > 0.5) {
            if (t_cross == 0.0) t_cross = pt.t;
            pt.lane_id = spec.target_lane_id;
        }
    }
    if (t_cross == 0.0) throw std::runtime_error("lane crossing fell outside the episode");
    out.truth.t_cross = t_cross;

    // clearance check at the crossing instant
    std::string tlv_id = vehicle_name(spec, 1, g);
    std::string tfv_id = vehicle_name(spec, 1, g + 1);
    const VehicleTrack& tlv = out.data.tracks.at(tlv_id);
    const VehicleTrack& tfv = out.data.tracks.at(tfv_id);
    auto x_of = [&](const VehicleTrack& tr) {
        auto v = tr.x_at(t_cross);
        if (!v) throw std::runtime_error("crossing instant outside track coverage");
        return *v;
    };
    double x_sv = x_of(sv), x_tlv = x_of(tlv), x_tfv = x_of(tfv);
    if (x_tlv - x_sv <= spec.original_lane[p].d || x_sv - x_tfv <= spec.target_lane[g + 1].d)
        throw std::runtime_error("insertion gap too small for the jam spacings");

    double v_des = spec.v_des_factor * max_profile_speed(spec.lead_profile);
    double t0 = spec.t_begin;
    size_t k0 = static_cast<size_t>(std::llround((t_cross - t0) / kGridDt));

    // target lane: followers of the gap react to the SV
    {
        std::vector<double> sv_x(sv.points.size());
        for (size_t k = 0; k < sv_x.size(); ++k) sv_x[k] = sv.points[k].x;
        std::vector<ResimVehicle> chain;
        for (size_t j = g + 1; j < spec.target_lane.size(); ++j) {
            ResimVehicle rv;
            rv.track = &out.data.tracks.at(vehicle_name(spec, 1, j));
            rv.tau = spec.target_lane[j].tau;
            rv.d = spec.target_lane[j].d;
            chain.push_back(rv);
        }
        resim_chain(chain, &sv_x, t0, k0, v_des, frame);
    }

    // original lane: followers close onto the vacated slot
    {
        const std::vector<double>* lead = nullptr;
        std::vector<double> lv_x;
        if (p >= 1) {
            const VehicleTrack& lv = out.data.tracks.at(vehicle_name(spec, 0, p - 1));
            lv_x.resize(lv.points.size());
            for (size_t k = 0; k < lv_x.size(); ++k) lv_x[k] = lv.points[k].x;
            lead = &lv_x;
        }
        std::vector<ResimVehicle> chain;
        for (size_t j = p + 1; j < spec.original_lane.size(); ++j) {
            ResimVehicle rv;
            rv.track = &out.data.tracks.at(vehicle_name(spec, 0, j));
            rv.tau = spec.original_lane[j].tau;
            rv.d = spec.original_lane[j].d;
            chain.push_back(rv);
        }
        resim_chain(chain, lead, t0, k0, v_des, frame);
    }

    // ground truth: first sample where the emitted speed leaves the baseline
    for (const auto& [id, tr] : out.data.tracks) {
        const VehicleTrack& base = baseline.tracks.at(id);
        for (size_t k = 0; k < tr.points.size(); ++k) {
            if (std::abs(tr.points[k].speed - base.points[k].speed) > 0.1) {
                out.truth.onset[id] = tr.points[k].t;
                if (tr.points[k].lane_id == spec.target_lane_id && id != out.truth.sv_id)
                    out.truth.affected_target.push_back(id);
                else if (id != out.truth.sv_id)
                    out.truth.affected_original.push_back(id);
                break;
            }
        }
    }
    return out;
}

void write_csv(const Dataset& data, const ScenarioSpec& spec, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    char buf[256];
    std::snprintf(buf, sizeof(buf), "# kilopost_origin=%.6f\n", spec.kilopost_origin);
    f << buf;
    f << "vehicle_id,datetime,vehicle_type,speed,lane_id,kilopost,lat,lon\n";
    for (const auto& [id, tr] : data.tracks) {
        for (const auto& pt : tr.points) {
            long long ms = std::llround(pt.t * 1000.0);
            double kp = spec.kilopost_origin - pt.x;
            std::snprintf(buf, sizeof(buf), "%s,%lld,%s,%.6f,%d,%.6f,%.10f,%.10f\n",
                          id.c_str(), ms, tr.vehicle_type.c_str(), pt.speed, pt.lane_id, kp,
                          pt.lat, pt.lon);
            f << buf;
        }
    }
}

void write_ground_truth(const GroundTruth& truth, const std::string& path) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["sv_id"] = truth.sv_id;
    j["t_maneuver"] = truth.t_maneuver;
    j["t_cross"] = truth.t_cross;
    j["original_lane"] = truth.original_lane;
    j["target_lane"] = truth.target_lane;
    j["onset"] = truth.onset;
    j["affected_target"] = truth.affected_target;
    j["affected_original"] = truth.affected_original;
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << j.dump(2) << "\n";
}

namespace {

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stod(item));
    }
    return out;
}

std::vector<SynthVehicle> build_lane(size_t n, const std::vector<double>& taus,
                                     const std::vector<double>& ds,
                                     const std::vector<double>& gaps) {
    auto pick = [](const std::vector<double>& v, size_t j, double dflt) {
        if (v.empty()) return dflt;
        if (v.size() == 1) return v[0];
        return v[std::min(j, v.size() - 1)];
    };
    std::vector<SynthVehicle> lane(n);
    for (size_t j = 0; j < n; ++j) {
        lane[j].tau = pick(taus, j, 1.0);
        lane[j].d = pick(ds, j, 5.0);
        lane[j].extra_gap = pick(gaps, j, 0.0);
    }
    return lane;
}

}  // namespace

ScenarioSpec parse_scenario(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open scenario " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(f, line)) {
        size_t h = line.find('#');
        if (h != std::string::npos) line = line.substr(0, h);
        size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            size_t a = s.find_first_not_of(" \t\r");
            size_t b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (!key.empty()) kv[key] = val;
    }

    ScenarioSpec spec;
    auto num = [&](const char* key, double dflt) {
        auto it = kv.find(key);
        return it == kv.end() ? dflt : std::stod(it->second);
    };
    auto integer = [&](const char* key, int dflt) {
        auto it = kv.find(key);
        return it == kv.end() ? dflt : std::stoi(it->second);
    };
    auto list = [&](const char* key) {
        auto it = kv.find(key);
        return it == kv.end() ? std::vector<double>() : parse_list(it->second);
    };

    if (kv.count("id_prefix")) spec.id_prefix = kv["id_prefix"];
    spec.t_begin = num("t_begin", spec.t_begin);
    spec.duration = num("duration", spec.duration);
    if (kv.count("lead_profile")) {
        spec.lead_profile.clear();
        std::stringstream ss(kv["lead_profile"]);
        std::string item;
        while (std::getline(ss, item, ',')) {
            size_t c = item.find(':');
            if (c == std::string::npos) throw std::runtime_error("lead_profile wants t:v pairs");
            spec.lead_profile.push_back({std::stod(item.substr(0, c)),
                                         std::stod(item.substr(c + 1))});
        }
    }
    size_t n_orig = static_cast<size_t>(integer("n_original", 5));
    size_t n_targ = static_cast<size_t>(integer("n_target", 6));
    spec.original_lane = build_lane(n_orig, list("taus_original"), list("ds_original"),
                                    list("gaps_original"));
    spec.target_lane = build_lane(n_targ, list("taus_target"), list("ds_target"),
                                  list("gaps_target"));
    spec.original_lane_id = integer("original_lane_id", spec.original_lane_id);
    spec.target_lane_id = integer("target_lane_id", spec.target_lane_id);
    spec.inject = integer("inject", spec.inject ? 1 : 0) != 0;
    spec.sv_index = integer("sv_index", spec.sv_index);
    spec.target_gap_index = integer("target_gap_index", spec.target_gap_index);
    spec.insertion_time = num("insertion_time", spec.insertion_time);
    spec.gap_fraction = num("gap_fraction", spec.gap_fraction);
    spec.lateral_ramp = num("lateral_ramp", spec.lateral_ramp);
    spec.v_des_factor = num("v_des_factor", spec.v_des_factor);
    spec.jitter_sigma = num("jitter_sigma", spec.jitter_sigma);
    spec.noise_sigma = num("noise_sigma", spec.noise_sigma);
    spec.seed = static_cast<unsigned>(integer("seed", static_cast<int>(spec.seed)));
    spec.x0 = num("x0", spec.x0);
    spec.x0_target = num("x0_target", spec.x0_target);
    spec.lane_width = num("lane_width", spec.lane_width);
    spec.kilopost_origin = num("kilopost_origin", spec.kilopost_origin);
    spec.anchor_lat = num("anchor_lat", spec.anchor_lat);
    spec.anchor_lon = num("anchor_lon", spec.anchor_lon);
    spec.bearing_deg = num("bearing_deg", spec.bearing_deg);
    return spec;
}

}  // namespace lcimpact
