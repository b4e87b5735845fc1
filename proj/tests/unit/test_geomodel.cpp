#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/LU>

#include "ghrc/error.hpp"
#include "ghrc/geomodel.hpp"
#include "ghrc/simulator.hpp"

using namespace ghrc;
using namespace ghrc::geomodel;
using geodesy::kDegToRad;

namespace {

GeometrySnapshot nadir_snapshot(const GeodeticPoint& target = {24.0, 80.0, 0.0}) {
  sim::Scenario sc;
  GeometrySnapshot s;
  s.ephemeris = sc.ephemeris;
  s.alignment = sc.nominal_alignment;
  s.encoder = sim::pointing_for_target(target, sc);
  return s;
}

// Great-circle-free local distance: ENU offset in metres.
double ground_distance_m(const GeodeticPoint& a, const GeodeticPoint& b) {
  return (geodesy::geodetic_to_ecef(a) - geodesy::geodetic_to_ecef(b)).norm() * 1e3;
}

}  // namespace

TEST_CASE("elementary rotations are proper and orthonormal") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ang(-360.0, 360.0);
  for (int i = 0; i < 200; ++i) {
    for (const Mat3& r : {rot_x(ang(rng)), rot_y(ang(rng)), rot_z(ang(rng)),
                          Mat3(rot_x(ang(rng)) * rot_y(ang(rng)) * rot_z(ang(rng)))}) {
      CHECK((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(std::abs(r.determinant() - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("rotations are active and right-handed") {
  const Vec3 ex = Vec3::UnitX(), ey = Vec3::UnitY(), ez = Vec3::UnitZ();
  CHECK((rot_x(90) * ey - ez).norm() < 1e-15);
  CHECK((rot_y(90) * ez - ex).norm() < 1e-15);
  CHECK((rot_z(90) * ex - ey).norm() < 1e-15);
}

TEST_CASE("check_rotation rejects non-rotations") {
  CHECK_NOTHROW(check_rotation(rot_z(12.3), "r"));
  Mat3 m = Mat3::Identity();
  m(0, 0) = -1.0;
  CHECK_THROWS_AS(check_rotation(m, "reflection"), ConfigurationError);
  CHECK_THROWS_AS(check_rotation(2.0 * Mat3::Identity(), "scaled"), ConfigurationError);
}

TEST_CASE("reflection is an involution and preserves length") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int i = 0; i < 500; ++i) {
    const Vec3 u(g(rng), g(rng), g(rng));
    const Vec3 n = Vec3(g(rng), g(rng), g(rng)).normalized();
    const Vec3 r = reflect(u, n);
    CHECK((reflect(r, n) - u).norm() < 1e-12 * std::max(1.0, u.norm()));
    CHECK(std::abs(r.norm() - u.norm()) < 1e-12 * std::max(1.0, u.norm()));
    // The component along the normal flips, the tangential one is kept.
    CHECK(std::abs(r.dot(n) + u.dot(n)) < 1e-12 * std::max(1.0, u.norm()));
  }
}

TEST_CASE("detector look angles") {
  CameraConstants k;
  const double c = (k.detector_pixels - 1) / 2.0;
  const auto centre = pixel_to_look_angles(c, c, k);
  CHECK(centre.psi_y_deg == doctest::Approx(0.0));
  CHECK(centre.psi_z_deg == doctest::Approx(0.0));
  const Vec3 u = look_vector(centre);
  CHECK((u - Vec3(-1, 0, 0)).norm() < 1e-15);
  // Edges span the field of view.
  const auto a = pixel_to_look_angles(-0.5, -0.5, k);
  const auto b = pixel_to_look_angles(k.detector_pixels - 0.5, k.detector_pixels - 0.5, k);
  CHECK(b.psi_y_deg - a.psi_y_deg == doctest::Approx(k.fov_deg).epsilon(1e-12));
  CHECK(b.psi_z_deg - a.psi_z_deg == doctest::Approx(k.fov_deg).epsilon(1e-12));
  CHECK_THROWS_AS(pixel_to_look_angles(-0.6, 0, k), DomainError);
  CHECK_THROWS_AS(pixel_to_look_angles(0, k.detector_pixels - 0.4, k), DomainError);
}

TEST_CASE("undistorted reference mirror normal is the instrument x axis") {
  CHECK((mirror_normal_ref({}) - Vec3::UnitX()).norm() < 1e-15);
  MirrorDistortion d{0.1, 0.2, 0.0, 0.0};
  const Vec3 n = mirror_normal_ref(d);
  CHECK(n.norm() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::asin(n.z()) / kDegToRad == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("ellipsoid intersection") {
  const double a = geodesy::kSemiMajorKm;
  const auto hit = intersect_ellipsoid(Vec3(2 * a, 0, 0), Vec3(-1, 0, 0), 0.0);
  CHECK(hit.lambda_km == doctest::Approx(a).epsilon(1e-12));
  CHECK(hit.point.lat_deg == doctest::Approx(0.0));
  CHECK(hit.point.lon_deg == doctest::Approx(0.0));
  // Polar axis is shorter.
  const auto pole = intersect_ellipsoid(Vec3(0, 0, 2 * a), Vec3(0, 0, -1), 0.0);
  CHECK(pole.lambda_km == doctest::Approx(2 * a - geodesy::kSemiMinorKm).epsilon(1e-12));
  // A raised surface is hit earlier by the height.
  const auto raised = intersect_ellipsoid(Vec3(2 * a, 0, 0), Vec3(-1, 0, 0), 1000.0);
  CHECK(hit.lambda_km - raised.lambda_km == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(raised.point.height_m == doctest::Approx(1000.0).epsilon(1e-6));
  CHECK_THROWS_AS(intersect_ellipsoid(Vec3(2 * a, 0, 0), Vec3(0, 1, 0), 0.0), MissesEarth);
  CHECK_THROWS_AS(intersect_ellipsoid(Vec3(2 * a, 0, 0), Vec3(1, 0, 0), 0.0), MissesEarth);
}

TEST_CASE("geodetic and ECEF conversions round-trip") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> lat(-89.0, 89.0), lon(-180.0, 180.0), h(-400.0, 9000.0);
  for (int i = 0; i < 300; ++i) {
    const GeodeticPoint p{lat(rng), lon(rng), h(rng)};
    const auto q = geodesy::ecef_to_geodetic(geodesy::geodetic_to_ecef(p));
    CHECK(q.lat_deg == doctest::Approx(p.lat_deg).epsilon(1e-12));
    CHECK(geodesy::normalize_lon(q.lon_deg - p.lon_deg) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::abs(q.height_m - p.height_m) < 1e-6);
  }
}

TEST_CASE("centre pixel lands on the pointed target") {
  const GeodeticPoint target{24.0, 80.0, 0.0};
  const auto snap = nadir_snapshot(target);
  CameraConstants k;
  const double c = (k.detector_pixels - 1) / 2.0;
  const auto p = geolocate(c, c, snap, k);
  // Whole-count pointing: within half an encoder step on the ground.
  CHECK(ground_distance_m(p, target) < 4.0 * k.nadir_gsd_m());
}

TEST_CASE("images are north-up with columns running east") {
  const auto snap = nadir_snapshot();
  CameraConstants k;
  const FrameGeometry g(snap, k);
  const double c = (k.detector_pixels - 1) / 2.0;
  const auto centre = g.geolocate(c, c);
  const auto east = g.geolocate(c, c + 200);
  const auto south = g.geolocate(c + 200, c);
  // Viewed obliquely from 55E the meridians lean a little in the image.
  CHECK(east.lon_deg > centre.lon_deg);
  CHECK(std::abs(east.lat_deg - centre.lat_deg) < 0.3 * (east.lon_deg - centre.lon_deg));
  CHECK(south.lat_deg < centre.lat_deg);
  CHECK(std::abs(south.lon_deg - centre.lon_deg) < 0.3 * (centre.lat_deg - south.lat_deg));
  // Straight below the satellite the axes align with east and south.
  const FrameGeometry sub(nadir_snapshot({0.0, 55.0, 0.0}), k);
  const auto c0 = sub.geolocate(c, c), e0 = sub.geolocate(c, c + 200), s0 = sub.geolocate(c + 200, c);
  CHECK(std::abs(e0.lat_deg - c0.lat_deg) < 1e-3 * (e0.lon_deg - c0.lon_deg));
  CHECK(std::abs(s0.lon_deg - c0.lon_deg) < 1e-3 * (c0.lat_deg - s0.lat_deg));
}

TEST_CASE("geolocate and ground_to_pixel round-trip to 1e-3 px") {
  std::mt19937_64 rng(21);
  CameraConstants k;
  std::uniform_real_distribution<double> px(-0.5, k.detector_pixels - 0.5);
  std::uniform_real_distribution<double> h(0.0, 5000.0);
  std::uniform_real_distribution<double> ang(-0.05, 0.05);
  for (int trial = 0; trial < 10; ++trial) {
    auto snap = nadir_snapshot({20.0 + trial, 75.0 + trial, 0.0});
    snap.attitude = {ang(rng), ang(rng), ang(rng)};
    snap.alignment.mirrorcube_to_instr_roll_deg = ang(rng);
    snap.alignment.distortion.alpha_deg = ang(rng);
    const FrameGeometry g(snap, k);
    for (int i = 0; i < 20; ++i) {
      const double r = px(rng), c = px(rng);
      const auto elev = projection::ElevationSource::constant(h(rng));
      const auto pt = g.geolocate(r, c, elev);
      const auto back = g.ground_to_pixel(pt);
      CHECK(std::abs(back.row - r) < 1e-3);
      CHECK(std::abs(back.col - c) < 1e-3);
    }
  }
}

TEST_CASE("free functions and FrameGeometry agree") {
  const auto snap = nadir_snapshot({22.0, 82.0, 0.0});
  CameraConstants k;
  const FrameGeometry g(snap, k);
  const auto a = geolocate(100.25, 1700.5, snap, k);
  const auto b = g.geolocate(100.25, 1700.5);
  CHECK(a.lat_deg == b.lat_deg);
  CHECK(a.lon_deg == b.lon_deg);
  const auto p = ground_to_pixel(a, snap, k);
  CHECK(p.row == doctest::Approx(100.25).epsilon(1e-6));
  CHECK(p.col == doctest::Approx(1700.5).epsilon(1e-6));
}

TEST_CASE("ground_to_pixel rejects points outside the frame") {
  const auto snap = nadir_snapshot();
  CameraConstants k;
  CHECK_THROWS_AS(ground_to_pixel({24.0, 85.0, 0.0}, snap, k), OutsideFrame);
}

TEST_CASE("15 encoder counts move the ground point by 60 EW / 30 NS pixels") {
  CameraConstants k;
  const auto snap = nadir_snapshot();
  const double c = (k.detector_pixels - 1) / 2.0;
  auto ew = snap;
  ew.encoder.ew_counts += 15;
  auto ns = snap;
  ns.encoder.ns_counts += 15;
  // Distances measured in the image of the unshifted frame are free of the
  // oblique-view stretch of the ground metric.
  const FrameGeometry g(snap, k);
  const auto pe = g.ground_to_pixel(geolocate(c, c, ew, k));
  const auto pn = g.ground_to_pixel(geolocate(c, c, ns, k));
  CHECK(pe.col - c == doctest::Approx(60.0).epsilon(0.05));
  CHECK(std::abs(pe.row - c) < 1.0);
  CHECK(pn.row - c == doctest::Approx(30.0).epsilon(0.05));
  CHECK(std::abs(pn.col - c) < 1.0);
}

TEST_CASE("at the sub-satellite point 15 counts are 60 / 30 nadir GSDs on the ground") {
  CameraConstants k;
  const auto snap = nadir_snapshot({0.0, 55.0, 0.0});
  const double c = (k.detector_pixels - 1) / 2.0;
  auto ew = snap;
  ew.encoder.ew_counts += 15;
  auto ns = snap;
  ns.encoder.ns_counts += 15;
  const auto p0 = geolocate(c, c, snap, k);
  CHECK(ground_distance_m(p0, geolocate(c, c, ew, k)) / k.nadir_gsd_m() ==
        doctest::Approx(60.0).epsilon(0.05));
  CHECK(ground_distance_m(p0, geolocate(c, c, ns, k)) / k.nadir_gsd_m() ==
        doctest::Approx(30.0).epsilon(0.05));
}

TEST_CASE("line of sight misses the Earth for far off-nadir pointing") {
  CameraConstants k;
  auto snap = nadir_snapshot();
  snap.encoder.ew_counts += static_cast<std::uint32_t>(9.0 / k.encoder_lsb_deg);
  const double c = (k.detector_pixels - 1) / 2.0;
  CHECK_THROWS_AS(geolocate(c, c, snap, k), MissesEarth);
}

TEST_CASE("camera constants validation") {
  CameraConstants k;
  CHECK_NOTHROW(k.validate());
  k.detector_pixels = 0;
  CHECK_THROWS_AS(k.validate(), ConfigurationError);
}
