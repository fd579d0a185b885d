#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lcimpact/trajectory.hpp"

namespace lcimpact {

// Equirectangular projection anchored at a reference latitude/longitude.
// Good to millimeters over the ~1 km extents this pipeline works with.
struct LocalProjection {
    double lat0 = 0.0;
    double lon0 = 0.0;
    double m_per_deg_lat = 0.0;
    double m_per_deg_lon = 0.0;

    static LocalProjection at(double lat0, double lon0);
    // Anchored at the mean lat/lon over all points of the dataset.
    static LocalProjection for_dataset(const Dataset& data);

    // east, north in meters relative to the anchor
    void to_local(double lat, double lon, double& east, double& north) const;
    void to_geo(double east, double north, double& lat, double& lon) const;
};

struct CenterlineSample {
    double x = 0.0;  // bin center, meters along route
    double lat = 0.0;
    double lon = 0.0;
};

struct LaneCenterline {
    int lane_id = 0;
    double bin_width = 10.0;
    std::vector<CenterlineSample> samples;  // sorted by x
};

// Averages lat/lon of all points of lane-keeping vehicles (tracks that never
// leave `lane_id`) into x bins and interpolates interior empty bins linearly.
// Throws std::runtime_error when no lane keeper exists or fewer than two bins
// are populated.
LaneCenterline build_centerline(const Dataset& data, int lane_id, double bin_width = 10.0);

// Fills point.lateral for the whole track: signed perpendicular distance from
// the locally linearized centerline at the point's x (end segments
// extrapolated). Raw sign is left-of-travel positive; `side_sign` flips it so
// positive points toward the passing lane.
void lateral_offsets(VehicleTrack& track, const LaneCenterline& centerline,
                     const LocalProjection& proj, double side_sign = 1.0);

// Sign that makes the mean raw offset of passing-lane keepers positive.
// nullopt when the passing lane has no lane keepers.
std::optional<double> detect_side_sign(const Dataset& data, const LaneCenterline& centerline,
                                       const LocalProjection& proj, int passing_lane_id);

}  // namespace lcimpact
