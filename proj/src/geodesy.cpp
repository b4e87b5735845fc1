#include "ghrc/geodesy.hpp"

#include <cmath>

namespace ghrc::geodesy {

double normalize_lon(double lon_deg) {
  double lon = std::fmod(lon_deg, 360.0);
  if (lon <= -180.0) lon += 360.0;
  if (lon > 180.0) lon -= 360.0;
  return lon;
}

Eigen::Vector3d geodetic_to_ecef(const GeodeticPoint& pt) {
  const double lat = pt.lat_deg * kDegToRad;
  const double lon = pt.lon_deg * kDegToRad;
  const double h = pt.height_m * 1e-3;
  const double s = std::sin(lat);
  const double n = kSemiMajorKm / std::sqrt(1.0 - kEccentricitySq * s * s);
  return {(n + h) * std::cos(lat) * std::cos(lon), (n + h) * std::cos(lat) * std::sin(lon),
          (n * (1.0 - kEccentricitySq) + h) * s};
}

GeodeticPoint ecef_to_geodetic(const Eigen::Vector3d& p) {
  const double rxy = std::hypot(p.x(), p.y());
  GeodeticPoint out;
  out.lon_deg = normalize_lon(std::atan2(p.y(), p.x()) * kRadToDeg);

  if (rxy < 1e-9) {
    out.lat_deg = p.z() >= 0.0 ? 90.0 : -90.0;
    out.height_m = (std::abs(p.z()) - kSemiMinorKm) * 1e3;
    return out;
  }

  // Fixed-point iteration on latitude; converges to ~1e-15 rad in a handful of steps
  // for any point above the centre of the Earth.
  double lat = std::atan2(p.z(), rxy * (1.0 - kEccentricitySq));
  double h = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double s = std::sin(lat);
    const double n = kSemiMajorKm / std::sqrt(1.0 - kEccentricitySq * s * s);
    h = rxy / std::cos(lat) - n;
    const double next = std::atan2(p.z(), rxy * (1.0 - kEccentricitySq * n / (n + h)));
    const bool done = std::abs(next - lat) < 1e-15;
    lat = next;
    if (done) break;
  }
  const double s = std::sin(lat);
  const double n = kSemiMajorKm / std::sqrt(1.0 - kEccentricitySq * s * s);
  // Height from the better-conditioned component.
  if (std::abs(lat) < kPi / 4.0)
    h = rxy / std::cos(lat) - n;
  else
    h = p.z() / s - n * (1.0 - kEccentricitySq);
  out.lat_deg = lat * kRadToDeg;
  out.height_m = h * 1e3;
  return out;
}

double gmst_rad(double t_utc_s) {
  const double days = t_utc_s / 86400.0;
  const double deg = 280.46061837 + 360.98564736629 * days;
  double rad = std::fmod(deg, 360.0) * kDegToRad;
  if (rad < 0.0) rad += 2.0 * kPi;
  return rad;
}

EnuBasis enu_basis(double lat_deg, double lon_deg) {
  const double lat = lat_deg * kDegToRad;
  const double lon = lon_deg * kDegToRad;
  EnuBasis b;
  b.east = {-std::sin(lon), std::cos(lon), 0.0};
  b.north = {-std::sin(lat) * std::cos(lon), -std::sin(lat) * std::sin(lon), std::cos(lat)};
  b.up = {std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon), std::sin(lat)};
  return b;
}

}  // namespace ghrc::geodesy
