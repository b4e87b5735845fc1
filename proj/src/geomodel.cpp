#include "ghrc/geomodel.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "ghrc/error.hpp"

namespace ghrc::geomodel {

using geodesy::kDegToRad;
using geodesy::kRadToDeg;

void CameraConstants::validate() const {
  if (!(fov_deg > 0.0 && fov_deg < 90.0)) throw ConfigurationError("fov_deg must be in (0, 90)");
  if (detector_pixels < 2) throw ConfigurationError("detector_pixels must be >= 2");
  if (!(encoder_lsb_deg > 0.0)) throw ConfigurationError("encoder_lsb_deg must be > 0");
  if (!(altitude_km > 0.0 && igfov_km > 0.0))
    throw ConfigurationError("altitude_km and igfov_km must be > 0");
  if (!(ew_ground_gain > 0.0 && ns_ground_gain > 0.0))
    throw ConfigurationError("ground gains must be > 0");
}

Mat3 rot_x(double deg) {
  const double c = std::cos(deg * kDegToRad), s = std::sin(deg * kDegToRad);
  Mat3 r;
  r << 1, 0, 0, 0, c, -s, 0, s, c;
  return r;
}

Mat3 rot_y(double deg) {
  const double c = std::cos(deg * kDegToRad), s = std::sin(deg * kDegToRad);
  Mat3 r;
  r << c, 0, s, 0, 1, 0, -s, 0, c;
  return r;
}

Mat3 rot_z(double deg) {
  const double c = std::cos(deg * kDegToRad), s = std::sin(deg * kDegToRad);
  Mat3 r;
  r << c, -s, 0, s, c, 0, 0, 0, 1;
  return r;
}

void check_rotation(const Mat3& r, const char* what) {
  const double err = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (!(err < 1e-9) || r.determinant() < 0.0)
    throw ConfigurationError(std::string(what) + " is not a proper rotation");
}

Vec3 look_vector(const DetectorLookAngles& a) {
  return {-1.0, std::tan(a.psi_y_deg * kDegToRad), std::tan(a.psi_z_deg * kDegToRad)};
}

DetectorLookAngles pixel_to_look_angles(double row, double col, const CameraConstants& consts) {
  const double n = consts.detector_pixels;
  constexpr double tol = 1e-9;
  if (!(row >= -0.5 - tol && row <= n - 0.5 + tol && col >= -0.5 - tol && col <= n - 0.5 + tol))
    throw DomainError("detector index outside [-0.5, N-0.5]: (" + std::to_string(row) + ", " +
                      std::to_string(col) + ")");
  const double center = (n - 1.0) / 2.0;
  return {(col - center) * consts.ifov_deg(), (row - center) * consts.ifov_deg()};
}

Vec3 to_instrument(const Vec3& u_look, const AlignmentSet& align) {
  check_rotation(align.focal_to_sensor, "focal_to_sensor");
  check_rotation(align.sensor_to_instr, "sensor_to_instr");
  return align.sensor_to_instr * (align.focal_to_sensor * u_look);
}

Vec3 mirror_normal_ref(const MirrorDistortion& d) {
  const double ab = (d.alpha_deg + d.beta_wedge_deg) * kDegToRad;
  const double gp = (d.gamma_deg + d.psi_wedge_deg) * kDegToRad;
  return {std::cos(ab) * std::cos(gp), std::cos(ab) * std::sin(gp), std::sin(ab)};
}

MirrorPointing mirror_pointing(const EncoderReading& enc, const CameraConstants& consts) {
  return {enc.ns_counts * consts.encoder_lsb_deg, enc.ew_counts * consts.encoder_lsb_deg};
}

namespace {
double wrap180(double deg) {
  double d = std::fmod(deg, 360.0);
  if (d <= -180.0) d += 360.0;
  if (d > 180.0) d -= 360.0;
  return d;
}
}  // namespace

Mat3 scan_mirror_rotation(const MirrorPointing& p, double ew_ref_deg, double ns_ref_deg,
                          const CameraConstants& consts) {
  // A rotation of the normal by theta deflects the reflected beam by 2*theta, so
  // each axis turns the normal by gain/2 times its encoder angle offset.
  const double ew = wrap180(p.m_pitch_deg - ew_ref_deg) * consts.ew_ground_gain / 2.0;
  const double ns = wrap180(p.m_roll_deg - ns_ref_deg) * consts.ns_ground_gain / 2.0;
  const Mat3 r_ew = rot_z(ew);
  const Mat3 r_ns = rot_y(-ns);
  return consts.mirror_order == MirrorOrder::NsThenEw ? Mat3(r_ew * r_ns) : Mat3(r_ns * r_ew);
}

Mat3 mirrorcube_to_instrument(const AlignmentSet& align) {
  return rot_y(align.mirrorcube_to_instr_roll_deg) * rot_z(align.mirrorcube_to_instr_pitch_deg);
}

Vec3 mirror_normal_current(const EncoderReading& enc, double ew_ref_deg, double ns_ref_deg,
                           const MirrorDistortion& d, const AlignmentSet& align,
                           const CameraConstants& consts) {
  const Vec3 n = mirrorcube_to_instrument(align) *
                 (scan_mirror_rotation(mirror_pointing(enc, consts), ew_ref_deg, ns_ref_deg,
                                       consts) *
                  mirror_normal_ref(d));
  const double norm = n.norm();
  if (!(norm > 0.0)) throw Error("mirror normal has zero norm");
  return n / norm;
}

Vec3 reflect(const Vec3& u, const Vec3& n_hat) {
  if (std::abs(n_hat.norm() - 1.0) > 1e-9) throw DomainError("reflect: normal is not unit length");
  return u - 2.0 * n_hat * u.dot(n_hat);
}

Mat3 instrument_to_spacecraft() {
  Mat3 m;
  m << 0, 1, 0, 0, 0, 1, 1, 0, 0;
  return m;
}

Mat3 spacecraft_to_orbital(const Attitude& att, AttitudeOrder order) {
  const Mat3 r = rot_x(att.roll_deg), p = rot_y(att.pitch_deg), y = rot_z(att.yaw_deg);
  return order == AttitudeOrder::RollPitchYaw ? Mat3(r * p * y) : Mat3(y * p * r);
}

Mat3 orbital_to_eci(const Ephemeris& eph, double t_s) {
  const Vec3& p = eph.position_ecef_km;
  if (!(p.norm() > 0.0)) throw DomainError("ephemeris position is zero");
  const Vec3 omega(0.0, 0.0, geodesy::kEarthRotationRadPerS);
  const Mat3 ecef_to_eci = rot_z(geodesy::gmst_rad(t_s) * kRadToDeg);
  const Vec3 r_eci = ecef_to_eci * p;
  const Vec3 v_eci = ecef_to_eci * (eph.velocity_ecef_kms + omega.cross(p));
  if (!(v_eci.norm() > 0.0)) throw DomainError("ephemeris inertial velocity is zero");

  const Vec3 z = -r_eci.normalized();
  const Vec3 y_raw = z.cross(v_eci);
  if (y_raw.norm() < 1e-12 * v_eci.norm())
    throw DomainError("ephemeris position and velocity are parallel");
  const Vec3 y = y_raw.normalized();
  const Vec3 x = y.cross(z);
  Mat3 m;
  m.col(0) = x;
  m.col(1) = y;
  m.col(2) = z;
  return m;
}

Mat3 instrument_to_ecef(const Attitude& att, const Ephemeris& eph, double t_s, AttitudeOrder order) {
  const Mat3 eci_to_ecef = rot_z(-geodesy::gmst_rad(t_s) * kRadToDeg);
  return eci_to_ecef * orbital_to_eci(eph, t_s) * spacecraft_to_orbital(att, order) *
         instrument_to_spacecraft();
}

Intersection intersect_ellipsoid(const Vec3& p, const Vec3& u, double target_height_m) {
  if (!(u.norm() > 0.0)) throw DomainError("intersect_ellipsoid: zero direction");
  const double h = target_height_m * 1e-3;
  const Vec3 scale(1.0 / (geodesy::kSemiMajorKm + h), 1.0 / (geodesy::kSemiMajorKm + h),
                   1.0 / (geodesy::kSemiMinorKm + h));
  const Vec3 ps = p.cwiseProduct(scale);
  const Vec3 us = u.cwiseProduct(scale);
  const double a = us.squaredNorm();
  const double b = 2.0 * ps.dot(us);
  const double c = ps.squaredNorm() - 1.0;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) throw MissesEarth("line of sight misses the Earth");
  const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
  double r1 = q / a;
  double r2 = q != 0.0 ? c / q : r1;
  if (r1 > r2) std::swap(r1, r2);
  const double lambda = r1 > 0.0 ? r1 : r2;
  if (!(lambda > 0.0)) throw MissesEarth("ellipsoid lies behind the line of sight");
  Intersection out;
  out.lambda_km = lambda;
  out.ecef_km = p + lambda * u;
  out.point = geodesy::ecef_to_geodetic(out.ecef_km);
  return out;
}

// ---------------------------------------------------------------------------

FrameGeometry::FrameGeometry(const GeometrySnapshot& snap, const CameraConstants& consts)
    : snap_(snap), consts_(consts) {
  consts_.validate();
  const AlignmentSet& al = snap.alignment;
  check_rotation(al.focal_to_sensor, "focal_to_sensor");
  check_rotation(al.sensor_to_instr, "sensor_to_instr");
  const Vec3 n_hat = mirror_normal_current(snap.encoder, al.ew_ref_angle_deg, al.ns_ref_angle_deg,
                                           al.distortion, al, consts_);
  const Mat3 reflection = Mat3::Identity() - 2.0 * n_hat * n_hat.transpose();
  const Mat3 focal_to_instr = al.sensor_to_instr * al.focal_to_sensor;
  const Mat3 instr_to_ecef =
      instrument_to_ecef(snap.attitude, snap.ephemeris, snap.time_s, consts_.attitude_order);
  focal_to_ecef_ = instr_to_ecef * reflection * focal_to_instr;
  ecef_to_focal_ = focal_to_instr.transpose() * reflection * instr_to_ecef.transpose();
}

Vec3 FrameGeometry::line_of_sight(double row, double col) const {
  const double center = (consts_.detector_pixels - 1.0) / 2.0;
  const double ifov = consts_.ifov_deg();
  const Vec3 u = look_vector({(col - center) * ifov, (row - center) * ifov});
  return (focal_to_ecef_ * u).normalized();
}

Intersection FrameGeometry::intersect(double row, double col, double height_m) const {
  return intersect_ellipsoid(position_km(), line_of_sight(row, col), height_m);
}

GeodeticPoint FrameGeometry::geolocate(double row, double col,
                                       const projection::ElevationSource& elev) const {
  const Vec3 los = line_of_sight(row, col);
  if (elev.is_constant())
    return intersect_ellipsoid(position_km(), los, elev.constant_height()).point;

  double h = 0.0;
  Intersection hit = intersect_ellipsoid(position_km(), los, h);
  for (int i = 0; i < 10; ++i) {
    const double next = elev.height_at(hit.point.lat_deg, hit.point.lon_deg);
    const bool done = std::abs(next - h) < 0.1;
    h = next;
    hit = intersect_ellipsoid(position_km(), los, h);
    if (done) break;
  }
  return hit.point;
}

bool FrameGeometry::contains(const PixelCoord& px) const {
  const double hi = consts_.detector_pixels - 0.5;
  return px.row >= -0.5 && px.row <= hi && px.col >= -0.5 && px.col <= hi;
}

std::optional<PixelCoord> FrameGeometry::project(const GeodeticPoint& pt) const {
  const Vec3 target = geodesy::geodetic_to_ecef(pt);
  const Vec3 d = target - position_km();
  const double range = d.norm();
  const Vec3 v = ecef_to_focal_ * d;
  if (!(v.x() < 0.0)) return std::nullopt;

  try {
    const Intersection first = intersect_ellipsoid(position_km(), d / range, pt.height_m);
    if (first.lambda_km < range - 1.0) return std::nullopt;
  } catch (const MissesEarth&) {
    // Grazing geometry against the inflated ellipsoid; the point itself is visible.
  }

  const double center = (consts_.detector_pixels - 1.0) / 2.0;
  const double ifov = consts_.ifov_deg();
  const double psi_y = std::atan(v.y() / -v.x()) * kRadToDeg;
  const double psi_z = std::atan(v.z() / -v.x()) * kRadToDeg;
  return PixelCoord{psi_z / ifov + center, psi_y / ifov + center};
}

PixelCoord FrameGeometry::refine(const GeodeticPoint& pt, PixelCoord px) const {
  const Vec3 target = (geodesy::geodetic_to_ecef(pt) - position_km()).normalized();
  // Two directions spanning the plane normal to the target line of sight.
  const Vec3 e1 = target.unitOrthogonal();
  const Vec3 e2 = target.cross(e1);
  const double ifov_rad = consts_.ifov_deg() * geodesy::kDegToRad;

  auto residual = [&](const PixelCoord& p) -> Eigen::Vector2d {
    const Vec3 diff = target - line_of_sight(p.row, p.col);
    return Eigen::Vector2d(e1.dot(diff), e2.dot(diff)) / ifov_rad;
  };

  constexpr double kStep = 1e-3;
  for (int it = 0; it < 20; ++it) {
    const Eigen::Vector2d r = residual(px);
    if (r.norm() < 1e-6) return px;
    Eigen::Matrix2d j;
    j.col(0) = (residual({px.row + kStep, px.col}) - r) / kStep;
    j.col(1) = (residual({px.row, px.col + kStep}) - r) / kStep;
    const Eigen::Vector2d delta = -j.fullPivLu().solve(r);
    px.row += delta(0);
    px.col += delta(1);
    if (delta.norm() < 1e-7) return px;
  }
  throw NonConvergence("ground_to_pixel did not converge in 20 iterations");
}

PixelCoord FrameGeometry::ground_to_pixel(const GeodeticPoint& pt) const {
  const auto guess = project(pt);
  if (!guess) throw OutsideFrame("ground point is not visible from this snapshot");
  const PixelCoord px = refine(pt, *guess);
  if (!contains(px))
    throw OutsideFrame("ground point projects outside the detector (" + std::to_string(px.row) +
                       ", " + std::to_string(px.col) + ")");
  return px;
}

// ---------------------------------------------------------------------------

GeodeticPoint geolocate(double row, double col, const GeometrySnapshot& snap,
                        const CameraConstants& consts, const projection::ElevationSource& elev) {
  pixel_to_look_angles(row, col, consts);  // range check
  return FrameGeometry(snap, consts).geolocate(row, col, elev);
}

PixelCoord ground_to_pixel(const GeodeticPoint& pt, const GeometrySnapshot& snap,
                           const CameraConstants& consts) {
  return FrameGeometry(snap, consts).ground_to_pixel(pt);
}

}  // namespace ghrc::geomodel
