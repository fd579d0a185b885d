#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lcimpact {

// Nominal sampling interval of the input data, seconds.
inline constexpr double kGridDt = 0.1;

struct TrajectoryPoint {
    double t = 0.0;      // seconds
    double x = 0.0;      // meters along route, increasing in travel direction
    double speed = 0.0;  // m/s
    int lane_id = 0;
    double lat = 0.0;    // degrees
    double lon = 0.0;    // degrees
    // Signed distance from the driving-lane centerline, positive toward the
    // passing lane. NaN until lateral offsets have been computed.
    double lateral = std::numeric_limits<double>::quiet_NaN();
};

// A coverage hole too wide to interpolate across. Samples exist at both
// endpoints; nothing in between.
struct TimeGap {
    double t_before = 0.0;
    double t_after = 0.0;
};

struct VehicleTrack {
    std::string vehicle_id;
    std::string vehicle_type;
    std::vector<TrajectoryPoint> points;  // sorted by t, strictly increasing
    std::vector<TimeGap> gaps;            // sorted, gaps wider than the interp limit

    double start_time() const { return points.empty() ? 0.0 : points.front().t; }
    double end_time() const { return points.empty() ? 0.0 : points.back().t; }

    // Index of the last point with t <= query (points must be non-empty and
    // query within [start_time, end_time]).
    std::size_t index_at_or_before(double t) const;

    // Linear interpolation between samples. nullopt outside coverage or when
    // the query time falls inside a recorded gap.
    std::optional<double> x_at(double t) const;
    std::optional<double> speed_at(double t) const;
    std::optional<double> lateral_at(double t) const;
    std::optional<int> lane_at(double t) const;  // lane of last sample at or before t

    bool covers(double t0, double t1) const;  // inside coverage, no gap overlap
    bool in_lane_throughout(int lane_id, double t0, double t1) const;
};

struct Dataset {
    std::map<std::string, VehicleTrack> tracks;  // keyed by vehicle_id
    double kilopost_origin = 0.0;                // meters; x = origin - kilopost
};

enum class SpeedUnit { mps, kmh };
enum class KilopostUnit { m, km };
enum class DatetimeFormat { epoch_ms, iso, seconds };

struct IngestConfig {
    SpeedUnit speed_unit = SpeedUnit::mps;
    KilopostUnit kilopost_unit = KilopostUnit::m;
    DatetimeFormat datetime_format = DatetimeFormat::epoch_ms;
    // When unset, origin = max kilopost in the file rounded up to a meter.
    std::optional<double> kilopost_origin;
    double max_interp_gap = 0.5;  // seconds; wider holes become TimeGaps
};

class ParseError : public std::runtime_error {
  public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

  private:
    std::size_t line_;
};

// Reads a trajectory CSV. Accepts the raw schema
//   vehicle_id,datetime,vehicle_type,speed,lane_id,kilopost,lat,lon
// or the normalized schema produced by serialize_dataset
//   vehicle_id,t,vehicle_type,speed,lane_id,x,lat,lon
// (detected by header). Rows are sorted per vehicle, units converted to
// seconds/meters/mps, kiloposts flipped to travel direction, sub-0.5 s holes
// filled by linear interpolation and wider holes recorded as gaps.
Dataset parse_dataset(const std::string& path, const IngestConfig& cfg);

// Writes the normalized schema with round-trip-exact doubles.
void serialize_dataset(const Dataset& data, const std::string& path);

// Centered moving average over `window` seconds (full width). The window
// shrinks symmetrically at segment ends; gap boundaries act like track ends.
// Window <= grid step returns the track unchanged.
VehicleTrack smooth_speeds(const VehicleTrack& track, double window);

// In-place variant applied to every track of a dataset.
void smooth_speeds(Dataset& data, double window);

}  // namespace lcimpact
