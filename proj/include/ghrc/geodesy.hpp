#pragma once

#include <Eigen/Core>

namespace ghrc::geodesy {

// WGS-84, kilometres.
inline constexpr double kSemiMajorKm = 6378.137;
inline constexpr double kFlattening = 1.0 / 298.257223563;
inline constexpr double kSemiMinorKm = kSemiMajorKm * (1.0 - kFlattening);
inline constexpr double kEccentricitySq = kFlattening * (2.0 - kFlattening);
inline constexpr double kEarthRotationRadPerS = 7.2921158553e-5;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kDegToRad = kPi / 180.0;
inline constexpr double kRadToDeg = 180.0 / kPi;

struct GeodeticPoint {
  double lat_deg = 0.0;
  double lon_deg = 0.0;
  double height_m = 0.0;
};

/// Wraps a longitude into (-180, 180].
double normalize_lon(double lon_deg);

Eigen::Vector3d geodetic_to_ecef(const GeodeticPoint& pt);

/// Iterative ECEF -> geodetic. Position in km, height returned in metres.
GeodeticPoint ecef_to_geodetic(const Eigen::Vector3d& p_km);

/// Greenwich sidereal angle for UTC seconds since J2000 (2000-01-01 12:00).
/// Linear in time; simulator and processor share it.
double gmst_rad(double t_utc_s);

/// Local east/north/up unit vectors (ECEF) at a geodetic location.
struct EnuBasis {
  Eigen::Vector3d east, north, up;
};
EnuBasis enu_basis(double lat_deg, double lon_deg);

}  // namespace ghrc::geodesy
