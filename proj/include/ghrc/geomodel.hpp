#pragma once

// Rigid geolocation model of a two-axis scan-mirror frame camera on a
// geostationary platform: detector look vector -> instrument frame -> mirror
// reflection -> spacecraft/orbital/inertial/Earth-fixed frames -> ellipsoid.
//
// Conventions (fixed, asserted by tests):
//   focal plane  boresight along -x; +psi_y looks East, +psi_z looks South at nadir
//   instrument   after the zero-distortion mirror the boresight is +x (nadir),
//                +y East, +z South; instrument x/y/z = spacecraft yaw/roll/pitch axes
//   spacecraft   roll about the velocity axis, pitch about the negative orbit
//                normal, yaw toward the Earth centre
//   encoder      +EW counts move the line of sight East, +NS counts South

#include <Eigen/Core>
#include <cstdint>
#include <optional>

#include "ghrc/elevation.hpp"
#include "ghrc/geodesy.hpp"

namespace ghrc::geomodel {

using geodesy::GeodeticPoint;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr int kEncoderBits = 21;
inline constexpr std::uint32_t kEncoderMaxCounts = (1u << kEncoderBits) - 1u;

struct DetectorLookAngles {
  double psi_y_deg = 0.0;
  double psi_z_deg = 0.0;
};

/// Mirror axis tilt (alpha, gamma) and surface wedge (beta, psi). Only the sums
/// alpha+beta and gamma+psi are observable on the ground.
struct MirrorDistortion {
  double alpha_deg = 0.0;
  double beta_wedge_deg = 0.0;
  double gamma_deg = 0.0;
  double psi_wedge_deg = 0.0;
};

struct EncoderReading {
  std::uint32_t ew_counts = 0;
  std::uint32_t ns_counts = 0;
};

/// Mirror angles about the roll (NS) and pitch (EW) axes.
struct MirrorPointing {
  double m_roll_deg = 0.0;
  double m_pitch_deg = 0.0;
};

struct Attitude {
  double roll_deg = 0.0;
  double pitch_deg = 0.0;
  double yaw_deg = 0.0;
};

struct Ephemeris {
  Vec3 position_ecef_km = Vec3::Zero();
  Vec3 velocity_ecef_kms = Vec3::Zero();
  double epoch_s = 0.0;
};

struct AlignmentSet {
  Mat3 focal_to_sensor = Mat3::Identity();
  Mat3 sensor_to_instr = Mat3::Identity();
  double mirrorcube_to_instr_roll_deg = 0.0;
  double mirrorcube_to_instr_pitch_deg = 0.0;
  double ew_ref_angle_deg = 195.44;
  double ns_ref_angle_deg = 15.79;
  MirrorDistortion distortion;
};

enum class AttitudeOrder { RollPitchYaw, YawPitchRoll };
enum class MirrorOrder { NsThenEw, EwThenNs };

struct CameraConstants {
  double fov_deg = 0.176;
  double altitude_km = 35786.0;
  double igfov_km = 110.0;
  int detector_pixels = 2048;
  double encoder_lsb_deg = 360.0 / static_cast<double>(1u << kEncoderBits);
  double ew_ground_gain = 2.0;
  double ns_ground_gain = 1.0;
  AttitudeOrder attitude_order = AttitudeOrder::RollPitchYaw;
  MirrorOrder mirror_order = MirrorOrder::NsThenEw;

  double ifov_deg() const { return fov_deg / detector_pixels; }
  /// Ground sample distance at the sub-satellite point, metres.
  double nadir_gsd_m() const {
    return altitude_km * 1e3 * ifov_deg() * geodesy::kDegToRad;
  }
  void validate() const;
};

struct GeometrySnapshot {
  Ephemeris ephemeris;
  Attitude attitude;
  EncoderReading encoder;
  AlignmentSet alignment;
  double time_s = 0.0;
};

struct PixelCoord {
  double row = 0.0;
  double col = 0.0;
};

struct Intersection {
  GeodeticPoint point;
  Vec3 ecef_km = Vec3::Zero();
  double lambda_km = 0.0;
};

// -- elementary rotations (active, right-handed, degrees) --
Mat3 rot_x(double deg);
Mat3 rot_y(double deg);
Mat3 rot_z(double deg);

/// Throws ConfigurationError unless R is a proper rotation to 1e-9.
void check_rotation(const Mat3& r, const char* what);

Vec3 look_vector(const DetectorLookAngles& angles);

DetectorLookAngles pixel_to_look_angles(double row, double col, const CameraConstants& consts);

Vec3 to_instrument(const Vec3& u_look, const AlignmentSet& align);

Vec3 mirror_normal_ref(const MirrorDistortion& d);

MirrorPointing mirror_pointing(const EncoderReading& enc, const CameraConstants& consts);

/// Scan-mirror rotation for the given mirror angles relative to the reference angles.
Mat3 scan_mirror_rotation(const MirrorPointing& pointing, double ew_ref_deg, double ns_ref_deg,
                          const CameraConstants& consts);

/// Mirror-cube to instrument mounting rotation.
Mat3 mirrorcube_to_instrument(const AlignmentSet& align);

Vec3 mirror_normal_current(const EncoderReading& enc, double ew_ref_deg, double ns_ref_deg,
                           const MirrorDistortion& d, const AlignmentSet& align,
                           const CameraConstants& consts);

Vec3 reflect(const Vec3& u, const Vec3& n_hat);

/// Fixed axis permutation from instrument to spacecraft body axes.
Mat3 instrument_to_spacecraft();

Mat3 spacecraft_to_orbital(const Attitude& att, AttitudeOrder order = AttitudeOrder::RollPitchYaw);

Mat3 orbital_to_eci(const Ephemeris& eph, double t_s);

Mat3 instrument_to_ecef(const Attitude& att, const Ephemeris& eph, double t_s,
                        AttitudeOrder order = AttitudeOrder::RollPitchYaw);

Intersection intersect_ellipsoid(const Vec3& p_ecef_km, const Vec3& u_ecef, double target_height_m);

GeodeticPoint geolocate(double row, double col, const GeometrySnapshot& snap,
                        const CameraConstants& consts,
                        const projection::ElevationSource& elev = {});

PixelCoord ground_to_pixel(const GeodeticPoint& pt, const GeometrySnapshot& snap,
                           const CameraConstants& consts);

/// Precomputed per-snapshot model; all the free functions above route through
/// the same arithmetic. Cheap to copy.
class FrameGeometry {
 public:
  FrameGeometry(const GeometrySnapshot& snap, const CameraConstants& consts);

  const CameraConstants& constants() const { return consts_; }
  const GeometrySnapshot& snapshot() const { return snap_; }

  /// Unit line of sight in ECEF. No range check on the indices.
  Vec3 line_of_sight(double row, double col) const;

  GeodeticPoint geolocate(double row, double col,
                          const projection::ElevationSource& elev = {}) const;
  Intersection intersect(double row, double col, double height_m) const;

  /// Detector coordinates of a ground point, possibly outside the detector.
  /// nullopt if the point is behind the instrument or hidden by the Earth.
  std::optional<PixelCoord> project(const GeodeticPoint& pt) const;

  /// project() followed by Gauss-Newton refinement; throws OutsideFrame /
  /// NonConvergence.
  PixelCoord ground_to_pixel(const GeodeticPoint& pt) const;

  bool contains(const PixelCoord& px) const;

  const Vec3& position_km() const { return snap_.ephemeris.position_ecef_km; }

 private:
  PixelCoord refine(const GeodeticPoint& pt, PixelCoord start) const;

  GeometrySnapshot snap_;
  CameraConstants consts_;
  Mat3 focal_to_ecef_;  // improper: includes the mirror reflection
  Mat3 ecef_to_focal_;
};

}  // namespace ghrc::geomodel
