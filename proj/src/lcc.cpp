#include "ghrc/lcc.hpp"

#include <cmath>
#include <string>

#include "ghrc/error.hpp"

namespace ghrc::projection {

using geodesy::kDegToRad;
using geodesy::kPi;
using geodesy::kRadToDeg;

namespace {
const double kE = std::sqrt(geodesy::kEccentricitySq);
const double kA = geodesy::kSemiMajorKm * 1e3;

double m_of(double lat) {
  const double s = std::sin(lat);
  return std::cos(lat) / std::sqrt(1.0 - geodesy::kEccentricitySq * s * s);
}
}  // namespace

double Lcc::t_of(double lat) const {
  const double es = kE * std::sin(lat);
  return std::tan(kPi / 4.0 - lat / 2.0) / std::pow((1.0 - es) / (1.0 + es), kE / 2.0);
}

Lcc::Lcc(const LccParams& p) : p_(p) {
  if (!(std::abs(p.std_parallel_1) < 90.0 && std::abs(p.std_parallel_2) < 90.0))
    throw DomainError("LCC standard parallels must be inside (-90, 90)");
  const double phi1 = p.std_parallel_1 * kDegToRad;
  const double phi2 = p.std_parallel_2 * kDegToRad;
  const double m1 = m_of(phi1);
  const double t1 = t_of(phi1);
  if (std::abs(phi1 - phi2) < 1e-12) {
    n_ = std::sin(phi1);
  } else {
    n_ = (std::log(m1) - std::log(m_of(phi2))) / (std::log(t1) - std::log(t_of(phi2)));
  }
  if (std::abs(n_) < 1e-12) throw DomainError("LCC cone constant is zero (equator-symmetric parallels)");
  f_ = m1 / (n_ * std::pow(t1, n_));
  rho0_ = kA * f_ * std::pow(t_of(p.lat_origin * kDegToRad), n_);
}

MapPoint Lcc::forward(double lat_deg, double lon_deg) const {
  if (!(std::abs(lat_deg) < 90.0)) throw DomainError("LCC forward undefined at the poles");
  const double rho = kA * f_ * std::pow(t_of(lat_deg * kDegToRad), n_);
  const double theta = n_ * geodesy::normalize_lon(lon_deg - p_.lon_origin) * kDegToRad;
  return {p_.false_easting + rho * std::sin(theta),
          p_.false_northing + rho0_ - rho * std::cos(theta)};
}

GeodeticPoint Lcc::inverse(double x, double y) const {
  if (!std::isfinite(x) || !std::isfinite(y)) throw DomainError("LCC inverse: non-finite input");
  const double dx = x - p_.false_easting;
  const double dy = rho0_ - (y - p_.false_northing);
  const double sign = n_ > 0.0 ? 1.0 : -1.0;
  const double rho = sign * std::hypot(dx, dy);
  const double theta = std::atan2(sign * dx, sign * dy);
  const double dlon = theta / n_;
  if (std::abs(dlon) > kPi) throw DomainError("LCC inverse: point beyond the projection cut");

  GeodeticPoint out;
  out.lon_deg = geodesy::normalize_lon(p_.lon_origin + dlon * kRadToDeg);
  if (rho == 0.0) {
    out.lat_deg = sign * 90.0;
    return out;
  }
  const double t = std::pow(rho / (kA * f_), 1.0 / n_);
  if (!std::isfinite(t) || t <= 0.0) throw DomainError("LCC inverse: outside the projection zone");
  double lat = kPi / 2.0 - 2.0 * std::atan(t);
  for (int i = 0; i < 50; ++i) {
    const double es = kE * std::sin(lat);
    const double next =
        kPi / 2.0 - 2.0 * std::atan(t * std::pow((1.0 - es) / (1.0 + es), kE / 2.0));
    if (std::abs(next - lat) < 1e-15) {
      out.lat_deg = next * kRadToDeg;
      return out;
    }
    lat = next;
  }
  throw DomainError("LCC inverse: latitude iteration did not converge");
}

double Lcc::scale_factor(double lat_deg) const {
  const double lat = lat_deg * kDegToRad;
  const double rho = kA * f_ * std::pow(t_of(lat), n_);
  return rho * n_ / (kA * m_of(lat));
}

MapPoint lcc_forward(const GeodeticPoint& pt, const LccParams& p) { return Lcc(p).forward(pt); }

GeodeticPoint lcc_inverse(double x, double y, const LccParams& p) { return Lcc(p).inverse(x, y); }

}  // namespace ghrc::projection
