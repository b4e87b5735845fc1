#pragma once

#include <vector>

namespace ghrc::projection {

/// Terrain height above the WGS-84 ellipsoid: a constant, or a regular
/// lat/lon grid looked up bilinearly.
class ElevationSource {
 public:
  ElevationSource() = default;

  static ElevationSource constant(double height_m);

  /// Row 0 is the northernmost latitude (lat_north_deg), rows step south by
  /// spacing_deg; columns step east from lon_west_deg.
  static ElevationSource grid(double lat_north_deg, double lon_west_deg, double spacing_deg,
                              int rows, int cols, std::vector<double> heights_m);

  bool is_constant() const { return heights_.empty(); }
  double constant_height() const { return constant_m_; }

  /// Height at a location; outside the grid the nearest edge sample is used.
  double height_at(double lat_deg, double lon_deg) const;

 private:
  double constant_m_ = 0.0;
  double lat_north_ = 0.0;
  double lon_west_ = 0.0;
  double spacing_ = 0.0;
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> heights_;
};

}  // namespace ghrc::projection
