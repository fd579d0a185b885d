#include "lcimpact/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lcimpact {

namespace {
constexpr double kEarthRadius = 6371000.0;
constexpr double kDegToRad = 3.14159265358979323846 / 180.0;
}  // namespace

LocalProjection LocalProjection::at(double lat0, double lon0) {
    LocalProjection p;
    p.lat0 = lat0;
    p.lon0 = lon0;
    p.m_per_deg_lat = kEarthRadius * kDegToRad;
    p.m_per_deg_lon = kEarthRadius * kDegToRad * std::cos(lat0 * kDegToRad);
    return p;
}

LocalProjection LocalProjection::for_dataset(const Dataset& data) {
    double sum_lat = 0.0, sum_lon = 0.0;
    std::size_t n = 0;
    for (const auto& [id, tr] : data.tracks) {
        for (const auto& p : tr.points) {
            sum_lat += p.lat;
            sum_lon += p.lon;
            ++n;
        }
    }
    if (n == 0) throw std::runtime_error("cannot anchor projection: dataset has no points");
    return at(sum_lat / static_cast<double>(n), sum_lon / static_cast<double>(n));
}

void LocalProjection::to_local(double lat, double lon, double& east, double& north) const {
    east = (lon - lon0) * m_per_deg_lon;
    north = (lat - lat0) * m_per_deg_lat;
}

void LocalProjection::to_geo(double east, double north, double& lat, double& lon) const {
    lon = lon0 + east / m_per_deg_lon;
    lat = lat0 + north / m_per_deg_lat;
}

LaneCenterline build_centerline(const Dataset& data, int lane_id, double bin_width) {
    if (bin_width <= 0.0) throw std::runtime_error("centerline bin width must be positive");

    double x_min = std::numeric_limits<double>::infinity();
    double x_max = -std::numeric_limits<double>::infinity();
    bool any_keeper = false;
    for (const auto& [id, tr] : data.tracks) {
        if (tr.points.empty()) continue;
        bool keeper = std::all_of(tr.points.begin(), tr.points.end(),
                                  [&](const TrajectoryPoint& p) { return p.lane_id == lane_id; });
        if (!keeper) continue;
        any_keeper = true;
        for (const auto& p : tr.points) {
            x_min = std::min(x_min, p.x);
            x_max = std::max(x_max, p.x);
        }
    }
    if (!any_keeper)
        throw std::runtime_error("no lane-keeping vehicles in lane " + std::to_string(lane_id));

    std::size_t n_bins = static_cast<std::size_t>(std::floor((x_max - x_min) / bin_width)) + 1;
    std::vector<double> sum_lat(n_bins, 0.0), sum_lon(n_bins, 0.0);
    std::vector<std::size_t> count(n_bins, 0);

    for (const auto& [id, tr] : data.tracks) {
        if (tr.points.empty()) continue;
        bool keeper = std::all_of(tr.points.begin(), tr.points.end(),
                                  [&](const TrajectoryPoint& p) { return p.lane_id == lane_id; });
        if (!keeper) continue;
        for (const auto& p : tr.points) {
            auto b = static_cast<std::size_t>((p.x - x_min) / bin_width);
            if (b >= n_bins) b = n_bins - 1;
            sum_lat[b] += p.lat;
            sum_lon[b] += p.lon;
            ++count[b];
        }
    }

    LaneCenterline cl;
    cl.lane_id = lane_id;
    cl.bin_width = bin_width;
    cl.samples.resize(n_bins);
    for (std::size_t b = 0; b < n_bins; ++b) {
        cl.samples[b].x = x_min + (static_cast<double>(b) + 0.5) * bin_width;
        if (count[b] > 0) {
            cl.samples[b].lat = sum_lat[b] / static_cast<double>(count[b]);
            cl.samples[b].lon = sum_lon[b] / static_cast<double>(count[b]);
        }
    }

    // trim empty end bins, interpolate interior holes linearly
    std::size_t first = 0, last = n_bins;
    while (first < n_bins && count[first] == 0) ++first;
    while (last > first && count[last - 1] == 0) --last;
    cl.samples.erase(cl.samples.begin() + static_cast<long>(last), cl.samples.end());
    cl.samples.erase(cl.samples.begin(), cl.samples.begin() + static_cast<long>(first));
    std::vector<bool> filled(cl.samples.size());
    for (std::size_t b = 0; b < cl.samples.size(); ++b) filled[b] = count[first + b] > 0;

    std::size_t i = 0;
    while (i < cl.samples.size()) {
        if (filled[i]) {
            ++i;
            continue;
        }
        std::size_t lo = i - 1;  // i > 0 because ends are trimmed
        std::size_t hi = i;
        while (!filled[hi]) ++hi;
        for (std::size_t k = i; k < hi; ++k) {
            double w = static_cast<double>(k - lo) / static_cast<double>(hi - lo);
            cl.samples[k].lat = cl.samples[lo].lat + w * (cl.samples[hi].lat - cl.samples[lo].lat);
            cl.samples[k].lon = cl.samples[lo].lon + w * (cl.samples[hi].lon - cl.samples[lo].lon);
        }
        i = hi;
    }

    if (cl.samples.size() < 2)
        throw std::runtime_error("centerline needs at least two populated bins");
    return cl;
}

namespace {

// Signed perpendicular distance (left of travel positive) from the centerline
// segment bracketing x; end segments extrapolate.
double raw_offset(const LaneCenterline& cl, const LocalProjection& proj, double x, double lat,
                  double lon) {
    const auto& s = cl.samples;
    std::size_t i = 0;
    if (x >= s.back().x) {
        i = s.size() - 2;
    } else if (x > s.front().x) {
        while (i + 2 < s.size() && s[i + 1].x <= x) ++i;
    }
    double ax, ay, bx, by, px, py;
    proj.to_local(s[i].lat, s[i].lon, ax, ay);
    proj.to_local(s[i + 1].lat, s[i + 1].lon, bx, by);
    proj.to_local(lat, lon, px, py);
    double dx = bx - ax, dy = by - ay;
    double len = std::hypot(dx, dy);
    if (len < 1e-9) throw std::runtime_error("degenerate centerline: coincident samples");
    return (dx * (py - ay) - dy * (px - ax)) / len;
}

}  // namespace

void lateral_offsets(VehicleTrack& track, const LaneCenterline& centerline,
                     const LocalProjection& proj, double side_sign) {
    for (auto& p : track.points) {
        p.lateral = side_sign * raw_offset(centerline, proj, p.x, p.lat, p.lon);
    }
}

std::optional<double> detect_side_sign(const Dataset& data, const LaneCenterline& centerline,
                                       const LocalProjection& proj, int passing_lane_id) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& [id, tr] : data.tracks) {
        if (tr.points.empty()) continue;
        bool keeper = std::all_of(tr.points.begin(), tr.points.end(), [&](const TrajectoryPoint& p) {
            return p.lane_id == passing_lane_id;
        });
        if (!keeper) continue;
        for (const auto& p : tr.points) {
            sum += raw_offset(centerline, proj, p.x, p.lat, p.lon);
            ++n;
        }
    }
    if (n == 0) return std::nullopt;
    return sum >= 0.0 ? 1.0 : -1.0;
}

}  // namespace lcimpact
