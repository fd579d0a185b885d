#include "lcimpact/trajectory.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace lcimpact {

namespace {

constexpr double kTimeTol = 1e-6;

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        std::size_t comma = line.find(',', pos);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(pos));
            break;
        }
        out.push_back(line.substr(pos, comma - pos));
        pos = comma + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

double parse_double(std::string_view s, std::size_t line, const char* what) {
    s = trim(s);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ParseError(line, std::string("bad ") + what + " value '" + std::string(s) + "'");
    return v;
}

long parse_long(std::string_view s, std::size_t line, const char* what) {
    s = trim(s);
    long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ParseError(line, std::string("bad ") + what + " value '" + std::string(s) + "'");
    return v;
}

// days since 1970-01-01 for a civil date (Howard Hinnant's algorithm)
long days_from_civil(long y, unsigned m, unsigned d) {
    y -= m <= 2;
    const long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long>(doe) - 719468;
}

double parse_iso_datetime(std::string_view s, std::size_t line) {
    s = trim(s);
    // YYYY-MM-DDTHH:MM:SS[.fff][Z]
    int y, mo, da, h, mi;
    double sec;
    char sepT;
    std::string buf(s);
    if (!buf.empty() && (buf.back() == 'Z' || buf.back() == 'z')) buf.pop_back();
    int n = std::sscanf(buf.c_str(), "%d-%d-%d%c%d:%d:%lf", &y, &mo, &da, &sepT, &h, &mi, &sec);
    if (n != 7 || (sepT != 'T' && sepT != ' '))
        throw ParseError(line, "bad datetime '" + std::string(s) + "'");
    long days = days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(da));
    return static_cast<double>(days) * 86400.0 + h * 3600.0 + mi * 60.0 + sec;
}

struct RawRow {
    double t;
    double speed;
    int lane_id;
    double pos;  // kilopost (raw schema) or x (normalized schema)
    double lat, lon;
    std::size_t line;
};

}  // namespace

std::size_t VehicleTrack::index_at_or_before(double t) const {
    auto it = std::upper_bound(points.begin(), points.end(), t,
                               [](double v, const TrajectoryPoint& p) { return v < p.t; });
    if (it == points.begin()) return 0;
    return static_cast<std::size_t>(std::distance(points.begin(), it)) - 1;
}

namespace {

bool in_gap(const std::vector<TimeGap>& gaps, double t) {
    for (const auto& g : gaps) {
        if (t > g.t_before + kTimeTol && t < g.t_after - kTimeTol) return true;
        if (g.t_before > t) break;
    }
    return false;
}

template <typename Get>
std::optional<double> interp_at(const VehicleTrack& tr, double t, Get get) {
    if (tr.points.empty()) return std::nullopt;
    if (t < tr.start_time() - kTimeTol || t > tr.end_time() + kTimeTol) return std::nullopt;
    if (in_gap(tr.gaps, t)) return std::nullopt;
    std::size_t i = tr.index_at_or_before(t);
    const auto& a = tr.points[i];
    if (i + 1 >= tr.points.size() || std::abs(a.t - t) <= kTimeTol) return get(a);
    const auto& b = tr.points[i + 1];
    double w = (t - a.t) / (b.t - a.t);
    return get(a) + w * (get(b) - get(a));
}

}  // namespace

std::optional<double> VehicleTrack::x_at(double t) const {
    return interp_at(*this, t, [](const TrajectoryPoint& p) { return p.x; });
}

std::optional<double> VehicleTrack::speed_at(double t) const {
    return interp_at(*this, t, [](const TrajectoryPoint& p) { return p.speed; });
}

std::optional<double> VehicleTrack::lateral_at(double t) const {
    return interp_at(*this, t, [](const TrajectoryPoint& p) { return p.lateral; });
}

std::optional<int> VehicleTrack::lane_at(double t) const {
    if (points.empty()) return std::nullopt;
    if (t < start_time() - kTimeTol || t > end_time() + kTimeTol) return std::nullopt;
    return points[index_at_or_before(t)].lane_id;
}

bool VehicleTrack::covers(double t0, double t1) const {
    if (points.empty() || t0 > t1) return false;
    if (t0 < start_time() - kTimeTol || t1 > end_time() + kTimeTol) return false;
    for (const auto& g : gaps) {
        if (g.t_before < t1 - kTimeTol && g.t_after > t0 + kTimeTol) return false;
    }
    return true;
}

bool VehicleTrack::in_lane_throughout(int lane_id, double t0, double t1) const {
    if (!covers(t0, t1)) return false;
    std::size_t i = index_at_or_before(t0);
    for (; i < points.size() && points[i].t <= t1 + kTimeTol; ++i) {
        if (points[i].lane_id != lane_id) return false;
    }
    return true;
}

Dataset parse_dataset(const std::string& path, const IngestConfig& cfg) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open input file: " + path);

    std::string line;
    std::size_t line_no = 0;
    std::optional<double> file_origin;

    // header (comment lines carry serialized metadata)
    bool normalized = false;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view lv = trim(line);
        if (lv.empty()) continue;
        if (lv.front() == '#') {
            auto eq = lv.find("kilopost_origin=");
            if (eq != std::string_view::npos) {
                file_origin = parse_double(lv.substr(eq + std::strlen("kilopost_origin=")), line_no, "kilopost_origin");
            }
            continue;
        }
        auto cols = split_csv(lv);
        if (cols.size() != 8) throw ParseError(line_no, "expected 8 header columns, got " + std::to_string(cols.size()));
        if (trim(cols[1]) == "t" && trim(cols[5]) == "x") {
            normalized = true;
        } else if (trim(cols[1]) == "datetime" && trim(cols[5]) == "kilopost") {
            normalized = false;
        } else {
            throw ParseError(line_no, "unrecognized header; expected raw or normalized trajectory schema");
        }
        break;
    }
    if (in.eof() && line_no == 0) throw std::runtime_error("empty input file: " + path);

    std::map<std::string, std::string> types;
    std::map<std::string, std::vector<RawRow>> rows;
    double max_kilopost = -std::numeric_limits<double>::infinity();

    while (std::getline(in, line)) {
        ++line_no;
        std::string_view lv = trim(line);
        if (lv.empty() || lv.front() == '#') continue;
        auto cols = split_csv(lv);
        if (cols.size() != 8) throw ParseError(line_no, "expected 8 columns, got " + std::to_string(cols.size()));

        RawRow r;
        r.line = line_no;
        std::string id(trim(cols[0]));
        if (id.empty()) throw ParseError(line_no, "empty vehicle_id");

        if (normalized) {
            r.t = parse_double(cols[1], line_no, "t");
            r.speed = parse_double(cols[3], line_no, "speed");
            r.pos = parse_double(cols[5], line_no, "x");
        } else {
            switch (cfg.datetime_format) {
                case DatetimeFormat::epoch_ms: r.t = parse_double(cols[1], line_no, "datetime") / 1000.0; break;
                case DatetimeFormat::iso: r.t = parse_iso_datetime(cols[1], line_no); break;
                case DatetimeFormat::seconds: r.t = parse_double(cols[1], line_no, "datetime"); break;
            }
            r.speed = parse_double(cols[3], line_no, "speed");
            if (cfg.speed_unit == SpeedUnit::kmh) r.speed /= 3.6;
            r.pos = parse_double(cols[5], line_no, "kilopost");
            if (cfg.kilopost_unit == KilopostUnit::km) r.pos *= 1000.0;
            max_kilopost = std::max(max_kilopost, r.pos);
        }
        if (r.speed < 0.0) throw ParseError(line_no, "negative speed");
        r.lane_id = static_cast<int>(parse_long(cols[4], line_no, "lane_id"));
        r.lat = parse_double(cols[6], line_no, "lat");
        r.lon = parse_double(cols[7], line_no, "lon");

        auto [it, fresh] = types.try_emplace(id, std::string(trim(cols[2])));
        (void)fresh;
        rows[id].push_back(r);
    }

    Dataset data;
    if (normalized) {
        data.kilopost_origin = file_origin.value_or(0.0);
    } else if (cfg.kilopost_origin) {
        data.kilopost_origin = *cfg.kilopost_origin;
    } else {
        data.kilopost_origin = std::isfinite(max_kilopost) ? std::ceil(max_kilopost) : 0.0;
    }

    for (auto& [id, vrows] : rows) {
        std::stable_sort(vrows.begin(), vrows.end(),
                         [](const RawRow& a, const RawRow& b) { return a.t < b.t; });
        VehicleTrack tr;
        tr.vehicle_id = id;
        tr.vehicle_type = types[id];
        tr.points.reserve(vrows.size());

        for (std::size_t i = 0; i < vrows.size(); ++i) {
            const RawRow& r = vrows[i];
            if (i > 0 && r.t - vrows[i - 1].t < kTimeTol)
                throw ParseError(r.line, "duplicate timestamp for vehicle " + id);

            TrajectoryPoint p;
            p.t = r.t;
            p.x = normalized ? r.pos : data.kilopost_origin - r.pos;
            p.speed = r.speed;
            p.lane_id = r.lane_id;
            p.lat = r.lat;
            p.lon = r.lon;

            if (!tr.points.empty()) {
                const TrajectoryPoint& prev = tr.points.back();
                double dt = p.t - prev.t;
                if (dt > cfg.max_interp_gap + kTimeTol) {
                    tr.gaps.push_back({prev.t, p.t});
                } else if (dt > kGridDt + kTimeTol) {
                    int missing = static_cast<int>(std::floor(dt / kGridDt - 0.5));
                    for (int k = 1; k <= missing; ++k) {
                        double tm = prev.t + kGridDt * k;
                        double w = (tm - prev.t) / dt;
                        TrajectoryPoint fill;
                        fill.t = tm;
                        fill.x = prev.x + w * (p.x - prev.x);
                        fill.speed = prev.speed + w * (p.speed - prev.speed);
                        fill.lane_id = prev.lane_id;
                        fill.lat = prev.lat + w * (p.lat - prev.lat);
                        fill.lon = prev.lon + w * (p.lon - prev.lon);
                        tr.points.push_back(fill);
                    }
                }
            }
            tr.points.push_back(p);
        }
        data.tracks.emplace(id, std::move(tr));
    }
    return data;
}

void serialize_dataset(const Dataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    char buf[512];
    std::snprintf(buf, sizeof(buf), "# kilopost_origin=%.17g\n", data.kilopost_origin);
    out << buf;
    out << "vehicle_id,t,vehicle_type,speed,lane_id,x,lat,lon\n";
    for (const auto& [id, tr] : data.tracks) {
        for (const auto& p : tr.points) {
            std::snprintf(buf, sizeof(buf), "%s,%.17g,%s,%.17g,%d,%.17g,%.17g,%.17g\n",
                          id.c_str(), p.t, tr.vehicle_type.c_str(), p.speed, p.lane_id, p.x,
                          p.lat, p.lon);
            out << buf;
        }
    }
}

VehicleTrack smooth_speeds(const VehicleTrack& track, double window) {
    int h = static_cast<int>(std::floor(window / (2.0 * kGridDt) + 1e-9));
    if (h <= 0 || track.points.size() < 2) return track;

    VehicleTrack out = track;
    // segment boundaries at gaps
    std::vector<std::size_t> seg_starts{0};
    for (std::size_t i = 1; i < track.points.size(); ++i) {
        if (track.points[i].t - track.points[i - 1].t > kGridDt + kTimeTol) seg_starts.push_back(i);
    }
    seg_starts.push_back(track.points.size());

    for (std::size_t s = 0; s + 1 < seg_starts.size(); ++s) {
        std::size_t lo = seg_starts[s], hi = seg_starts[s + 1];
        std::size_t n = hi - lo;
        if (n < 2) continue;
        std::vector<double> prefix(n + 1, 0.0);
        for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + track.points[lo + i].speed;
        for (std::size_t i = 0; i < n; ++i) {
            int hi_local = std::min<long>({static_cast<long>(h), static_cast<long>(i),
                                           static_cast<long>(n - 1 - i)});
            std::size_t a = i - hi_local, b = i + hi_local + 1;
            out.points[lo + i].speed = (prefix[b] - prefix[a]) / static_cast<double>(b - a);
        }
    }
    return out;
}

void smooth_speeds(Dataset& data, double window) {
    for (auto& [id, tr] : data.tracks) tr = smooth_speeds(tr, window);
}

}  // namespace lcimpact
