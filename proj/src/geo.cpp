#include "trajscope/geo.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace trajscope {

double haversine_m(double lat_a, double lon_a, double lat_b, double lon_b) {
  const double phi1 = lat_a * kDegToRad;
  const double phi2 = lat_b * kDegToRad;
  const double dphi = (lat_b - lat_a) * kDegToRad;
  const double dlam = (lon_b - lon_a) * kDegToRad;
  const double sp = std::sin(dphi / 2.0);
  const double sl = std::sin(dlam / 2.0);
  const double a = sp * sp + std::cos(phi1) * std::cos(phi2) * sl * sl;
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(a)));
}

int cell_of(double lat, double lon, const GridSpec& g) {
  const double x =
      (lon - g.origin_lon) * std::cos(g.origin_lat * kDegToRad) * kEarthRadiusM * kDegToRad;
  const double y = (lat - g.origin_lat) * kEarthRadiusM * kDegToRad;
  const double col = std::floor(x / g.cell_size_m);
  const double row = std::floor(y / g.cell_size_m);
  if (col < 0 || col >= g.n_cols || row < 0 || row >= g.n_rows) {
    std::ostringstream os;
    os << "point (" << lat << ", " << lon << ") outside grid: cell (" << row << ", " << col
       << ") not in [0," << g.n_rows << ")x[0," << g.n_cols << ")";
    throw OutOfBoundsError(os.str());
  }
  return static_cast<int>(row) * g.n_cols + static_cast<int>(col);
}

void cell_center(int token, const GridSpec& g, double& lat, double& lon) {
  const int row = token / g.n_cols;
  const int col = token % g.n_cols;
  const double x = (col + 0.5) * g.cell_size_m;
  const double y = (row + 0.5) * g.cell_size_m;
  lat = g.origin_lat + y / (kEarthRadiusM * kDegToRad);
  lon = g.origin_lon + x / (kEarthRadiusM * kDegToRad * std::cos(g.origin_lat * kDegToRad));
}

}  // namespace trajscope
