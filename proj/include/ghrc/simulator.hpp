#pragma once

// Synthetic acquisition of a two-axis raster scan: renders every band of every
// frame from a ground texture through the true geometry (realised encoder
// counts, drifting attitude, true alignment) and emits the telemetry the ground
// processor would see (commanded counts, nominal alignment) plus a truth log.

#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <utility>
#include <vector>

#include "ghrc/elevation.hpp"
#include "ghrc/geomodel.hpp"
#include "ghrc/raster.hpp"
#include "ghrc/scene.hpp"

namespace ghrc::sim {

using geomodel::Attitude;
using geomodel::CameraConstants;
using geomodel::EncoderReading;
using geomodel::GeometrySnapshot;

enum class ScanDirection { East, West };

struct ScanConfig {
  int rows = 1;
  int cols = 1;
  double ew_step_deg = 0.07;  // mirror degrees
  double ns_step_deg = 0.14;
  bool boustrophedon = true;
  double frame_period_s = 30.0;
  int band_count = 6;
  double band_interval_s = 20.0 / 6.0;
  double start_time_s = 0.0;
  /// Commanded counts of grid cell (0, 0).
  EncoderReading origin;
};

struct PlannedFrame {
  int id = 0;
  int grid_row = 0;
  int grid_col = 0;
  ScanDirection direction = ScanDirection::East;
  EncoderReading commanded;
  double start_time_s = 0.0;
};

struct ScanPlan {
  ScanConfig config;
  std::vector<PlannedFrame> frames;  // acquisition order

  /// Acquisition index of grid cell (row, col), or -1.
  int index_of(int grid_row, int grid_col) const;
};

ScanPlan plan_raster_scan(const ScanConfig& cfg, const CameraConstants& consts);

/// Nominal overlap fraction between EW-adjacent frames implied by the step.
double nominal_ew_overlap(const ScanConfig& cfg, const CameraConstants& consts);
double nominal_ns_overlap(const ScanConfig& cfg, const CameraConstants& consts);

struct EncoderNoiseModel {
  int pp_counts = 5;
  int settle_threshold_counts = 15;
  std::uint64_t rng_seed = 1;
  void validate() const;
};

/// commanded + uniform integer in [-pp, +pp] on each axis, modulo the encoder range.
EncoderReading sample_encoder(const EncoderReading& commanded, const EncoderNoiseModel& m,
                              std::mt19937_64& rng);

struct DriftModel {
  double roll_rate_deg_s = 1e-5;
  double pitch_rate_deg_s = 1e-5;
  double jitter_pp_deg = 0.0;
};

/// base + rate * t per axis, plus zero-mean uniform jitter of the configured
/// peak-to-peak amplitude when an RNG is supplied.
Attitude propagate_platform(double t_s, const DriftModel& d, const Attitude& base,
                            std::mt19937_64* rng = nullptr);

/// Static biases of the true instrument relative to the processor's nominal
/// alignment.
struct AlignmentBias {
  double mirrorcube_roll_deg = 0.0;
  double mirrorcube_pitch_deg = 0.0;
  double ew_ref_deg = 0.0;
  double ns_ref_deg = 0.0;
};

geomodel::AlignmentSet apply_bias(const geomodel::AlignmentSet& nominal, const AlignmentBias& b);

/// Geostationary ephemeris (ECEF, zero Earth-relative velocity) over a longitude.
geomodel::Ephemeris geostationary_ephemeris(double lon_deg, double epoch_s = 0.0);

struct Scenario {
  CameraConstants consts;
  geomodel::Ephemeris ephemeris = geostationary_ephemeris(55.0);
  Attitude base_attitude;
  geomodel::AlignmentSet nominal_alignment;
  AlignmentBias bias;
  EncoderNoiseModel noise;
  DriftModel drift;
  projection::ElevationSource elevation;
  int reference_band = 2;
  std::uint64_t seed = 1;
  bool render = true;
  /// Lattice spacing (detector pixels) of exact model evaluations during rendering.
  int render_node_step = 32;
};

/// Encoder reading that centres the boresight on `target` for the given
/// attitude/ephemeris/alignment (rounded to whole counts).
EncoderReading pointing_for_target(const geomodel::GeodeticPoint& target, const Scenario& sc,
                                   double t_s = 0.0);

/// Origin counts that put the middle of the scan grid on `center`.
EncoderReading centered_origin(const geomodel::GeodeticPoint& center, const ScanConfig& cfg,
                               const Scenario& sc);

struct TruthRecord {
  int frame_id = 0;
  int band = 0;
  double time_s = 0.0;
  EncoderReading commanded;
  EncoderReading realized;
  Attitude attitude;
  /// True image displacement of this band relative to band 0 and to the
  /// reference band, at the detector centre: a ground point seen at pixel p in
  /// the other band appears at p + shift in this band.
  double shift_vs_band0_line = 0.0, shift_vs_band0_pixel = 0.0;
  double shift_vs_ref_line = 0.0, shift_vs_ref_pixel = 0.0;
  /// Where the true geometry puts the ground point that telemetry geolocates at
  /// the detector centre, minus the centre (pixels).
  double knowledge_error_line = 0.0, knowledge_error_pixel = 0.0;
  std::array<geomodel::GeodeticPoint, 4> corners;  // UL, UR, LR, LL (true)
};

struct Frame {
  int id = 0;
  int grid_row = 0;
  int grid_col = 0;
  ScanDirection direction = ScanDirection::East;
  projection::Raster image;                 // band_count bands (empty if not rendered)
  std::vector<GeometrySnapshot> telemetry;  // per band, what the processor knows
};

/// Truth geometry of each band, kept alongside the frame for closed-loop tests.
struct FrameTruth {
  std::vector<GeometrySnapshot> snapshots;
  std::vector<TruthRecord> records;
};

/// Renders one frame from the per-band true snapshots.
projection::Raster render_frame(const Scene& scene, const std::vector<GeometrySnapshot>& truth,
                                const Scenario& sc);

/// Builds the per-band geometry of a planned frame and renders it.
std::pair<Frame, FrameTruth> acquire_frame(const Scene* scene, const PlannedFrame& planned,
                                           const ScanPlan& plan, const Scenario& sc);

using FrameSink = std::function<void(Frame&&, FrameTruth&&)>;

/// Acquires the whole plan in order, handing each frame to `sink`.
void acquire_scan(const ScanPlan& plan, const Scene* scene, const Scenario& sc,
                  const FrameSink& sink);

/// Convenience collecting every frame in memory.
struct ScanResult {
  std::vector<Frame> frames;
  std::vector<FrameTruth> truth;
};
ScanResult acquire_scan(const ScanPlan& plan, const Scene* scene, const Scenario& sc);

/// Displacement (line, pixel) at the detector centre of `to` relative to `from`.
std::pair<double, double> relative_shift(const GeometrySnapshot& from, const GeometrySnapshot& to,
                                         const CameraConstants& consts,
                                         const projection::ElevationSource& elev = {});

}  // namespace ghrc::sim
