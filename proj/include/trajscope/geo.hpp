#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace trajscope {

/// Sphere radius used by every distance in the project. Fixed so results
/// are exact and reproducible.
inline constexpr double kEarthRadiusM = 6'371'000.0;
inline constexpr double kDegToRad = 0.017453292519943295;

/// One GPS fix. lat/lon in WGS84 degrees, t in seconds since epoch.
struct GpsPoint {
  double lat = 0.0;
  double lon = 0.0;
  std::int64_t t = 0;
};

/// A dwell event: centroid of the fixes that formed it plus arrival and
/// departure times (t_depart > t_arrive).
struct StayPoint {
  double lat = 0.0;
  double lon = 0.0;
  std::int64_t t_arrive = 0;
  std::int64_t t_depart = 0;

  std::int64_t dwell_s() const { return t_depart - t_arrive; }
};

/// Uniform grid over the study area, anchored at its southwest corner.
/// Token ids are row-major: id = row * n_cols + col, id in [0, V).
struct GridSpec {
  double origin_lat = 0.0;
  double origin_lon = 0.0;
  double cell_size_m = 500.0;
  int n_rows = 1;
  int n_cols = 1;

  int vocab_size() const { return n_rows * n_cols; }
};

class OutOfBoundsError : public std::runtime_error {
 public:
  explicit OutOfBoundsError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Great-circle distance in meters on the fixed-radius sphere.
double haversine_m(double lat_a, double lon_a, double lat_b, double lon_b);

inline double haversine_m(const GpsPoint& a, const GpsPoint& b) {
  return haversine_m(a.lat, a.lon, b.lat, b.lon);
}

/// Grid cell of a coordinate under the local equirectangular projection
/// about the grid origin. Floor semantics: south/west edges inclusive.
/// Throws OutOfBoundsError when the point falls outside the grid.
int cell_of(double lat, double lon, const GridSpec& g);

inline int to_token(const StayPoint& p, const GridSpec& g) {
  return cell_of(p.lat, p.lon, g);
}

/// Coordinate of a cell's center; inverse of cell_of up to cell resolution.
void cell_center(int token, const GridSpec& g, double& lat, double& lon);

}  // namespace trajscope
