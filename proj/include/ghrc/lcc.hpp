#pragma once

#include "ghrc/geodesy.hpp"

namespace ghrc::projection {

using geodesy::GeodeticPoint;

struct LccParams {
  double std_parallel_1 = 12.472944;
  double std_parallel_2 = 35.172806;
  double lat_origin = 24.0;
  double lon_origin = 80.0;
  double false_easting = 0.0;
  double false_northing = 0.0;
};

struct MapPoint {
  double x = 0.0;
  double y = 0.0;
};

/// Two-standard-parallel Lambert conformal conic on WGS-84 (one-parallel form
/// when the parallels coincide). Constants are computed once per instance.
class Lcc {
 public:
  explicit Lcc(const LccParams& p = {});

  const LccParams& params() const { return p_; }

  /// Throws DomainError at the poles.
  MapPoint forward(double lat_deg, double lon_deg) const;
  MapPoint forward(const GeodeticPoint& pt) const { return forward(pt.lat_deg, pt.lon_deg); }

  /// Height is returned as 0. Throws DomainError when (x, y) lies outside the
  /// range the cone can represent or the latitude iteration fails.
  GeodeticPoint inverse(double x, double y) const;

  /// Point scale factor at a latitude.
  double scale_factor(double lat_deg) const;

 private:
  double t_of(double lat_rad) const;

  LccParams p_;
  double n_ = 0.0;
  double f_ = 0.0;
  double rho0_ = 0.0;
};

MapPoint lcc_forward(const GeodeticPoint& pt, const LccParams& p);
GeodeticPoint lcc_inverse(double x, double y, const LccParams& p);

}  // namespace ghrc::projection
