#include "ghrc/simulator.hpp"

#include <algorithm>
#include <cmath>

#include "ghrc/error.hpp"
#include "ghrc/parallel.hpp"

namespace ghrc::sim {

using geomodel::FrameGeometry;
using geomodel::GeodeticPoint;

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Independent deterministic stream per (seed, frame, band, purpose).
std::mt19937_64 stream(std::uint64_t seed, int frame, int band, int purpose) {
  std::uint64_t s = mix(seed);
  s = mix(s ^ static_cast<std::uint64_t>(frame));
  s = mix(s ^ static_cast<std::uint64_t>(band));
  s = mix(s ^ static_cast<std::uint64_t>(purpose));
  return std::mt19937_64(s);
}

std::uint32_t wrap_counts(long long c) {
  constexpr long long range = static_cast<long long>(geomodel::kEncoderMaxCounts) + 1;
  c %= range;
  if (c < 0) c += range;
  return static_cast<std::uint32_t>(c);
}

long long step_counts(double step_deg, const CameraConstants& consts) {
  return std::llround(step_deg / consts.encoder_lsb_deg);
}

}  // namespace

int ScanPlan::index_of(int grid_row, int grid_col) const {
  if (grid_row < 0 || grid_col < 0 || grid_row >= config.rows || grid_col >= config.cols) return -1;
  for (const auto& f : frames)
    if (f.grid_row == grid_row && f.grid_col == grid_col) return f.id;
  return -1;
}

ScanPlan plan_raster_scan(const ScanConfig& cfg, const CameraConstants& consts) {
  if (cfg.rows < 1 || cfg.cols < 1) throw ConfigurationError("scan needs rows, cols >= 1");
  if (!(cfg.ew_step_deg > 0.0 && cfg.ns_step_deg > 0.0))
    throw ConfigurationError("scan steps must be > 0");
  if (cfg.band_count < 1) throw ConfigurationError("band_count must be >= 1");
  const long long ew = step_counts(cfg.ew_step_deg, consts);
  const long long ns = step_counts(cfg.ns_step_deg, consts);

  ScanPlan plan;
  plan.config = cfg;
  int id = 0;
  for (int r = 0; r < cfg.rows; ++r) {
    const bool east = !cfg.boustrophedon || r % 2 == 0;
    for (int k = 0; k < cfg.cols; ++k) {
      const int c = east ? k : cfg.cols - 1 - k;
      PlannedFrame f;
      f.id = id;
      f.grid_row = r;
      f.grid_col = c;
      f.direction = east ? ScanDirection::East : ScanDirection::West;
      f.commanded.ew_counts = wrap_counts(cfg.origin.ew_counts + ew * c);
      f.commanded.ns_counts = wrap_counts(cfg.origin.ns_counts + ns * r);
      f.start_time_s = cfg.start_time_s + id * cfg.frame_period_s;
      plan.frames.push_back(f);
      ++id;
    }
  }
  return plan;
}

double nominal_ew_overlap(const ScanConfig& cfg, const CameraConstants& consts) {
  const double step = step_counts(cfg.ew_step_deg, consts) * consts.encoder_lsb_deg;
  return 1.0 - consts.ew_ground_gain * step / consts.fov_deg;
}

double nominal_ns_overlap(const ScanConfig& cfg, const CameraConstants& consts) {
  const double step = step_counts(cfg.ns_step_deg, consts) * consts.encoder_lsb_deg;
  return 1.0 - consts.ns_ground_gain * step / consts.fov_deg;
}

void EncoderNoiseModel::validate() const {
  if (pp_counts < 0) throw ConfigurationError("encoder pp_counts must be >= 0");
  if (settle_threshold_counts < pp_counts)
    throw ConfigurationError("encoder settle threshold must be >= pp_counts");
}

EncoderReading sample_encoder(const EncoderReading& commanded, const EncoderNoiseModel& m,
                              std::mt19937_64& rng) {
  m.validate();
  if (m.pp_counts == 0) return commanded;
  std::uniform_int_distribution<int> d(-m.pp_counts, m.pp_counts);
  const int dew = d(rng);
  const int dns = d(rng);
  return {wrap_counts(static_cast<long long>(commanded.ew_counts) + dew),
          wrap_counts(static_cast<long long>(commanded.ns_counts) + dns)};
}

Attitude propagate_platform(double t_s, const DriftModel& d, const Attitude& base,
                            std::mt19937_64* rng) {
  if (t_s < 0.0) throw DomainError("propagate_platform: negative time");
  Attitude a = base;
  a.roll_deg += d.roll_rate_deg_s * t_s;
  a.pitch_deg += d.pitch_rate_deg_s * t_s;
  if (rng && d.jitter_pp_deg > 0.0) {
    std::uniform_real_distribution<double> j(-0.5 * d.jitter_pp_deg, 0.5 * d.jitter_pp_deg);
    a.roll_deg += j(*rng);
    a.pitch_deg += j(*rng);
  }
  return a;
}

geomodel::AlignmentSet apply_bias(const geomodel::AlignmentSet& nominal, const AlignmentBias& b) {
  geomodel::AlignmentSet a = nominal;
  a.mirrorcube_to_instr_roll_deg += b.mirrorcube_roll_deg;
  a.mirrorcube_to_instr_pitch_deg += b.mirrorcube_pitch_deg;
  a.ew_ref_angle_deg += b.ew_ref_deg;
  a.ns_ref_angle_deg += b.ns_ref_deg;
  return a;
}

geomodel::Ephemeris geostationary_ephemeris(double lon_deg, double epoch_s) {
  const double r = geodesy::kSemiMajorKm + 35786.0;
  const double lon = lon_deg * geodesy::kDegToRad;
  geomodel::Ephemeris e;
  e.position_ecef_km = {r * std::cos(lon), r * std::sin(lon), 0.0};
  e.velocity_ecef_kms = geomodel::Vec3::Zero();
  e.epoch_s = epoch_s;
  return e;
}

EncoderReading pointing_for_target(const GeodeticPoint& target, const Scenario& sc, double t_s) {
  const CameraConstants& k = sc.consts;
  const geomodel::AlignmentSet& al = sc.nominal_alignment;
  const auto e0 = static_cast<std::uint32_t>(std::llround(al.ew_ref_angle_deg / k.encoder_lsb_deg));
  const auto n0 = static_cast<std::uint32_t>(std::llround(al.ns_ref_angle_deg / k.encoder_lsb_deg));
  const double center = (k.detector_pixels - 1.0) / 2.0;

  double ew_off = 0.0, ns_off = 0.0;
  for (int it = 0; it < 30; ++it) {
    GeometrySnapshot snap{sc.ephemeris, sc.base_attitude, {e0, n0}, al, t_s};
    snap.alignment.ew_ref_angle_deg = e0 * k.encoder_lsb_deg - ew_off;
    snap.alignment.ns_ref_angle_deg = n0 * k.encoder_lsb_deg - ns_off;
    const auto px = FrameGeometry(snap, k).project(target);
    if (!px) throw DomainError("pointing target is not visible from the platform");
    const double dew = (px->col - center) * k.ifov_deg() / k.ew_ground_gain;
    const double dns = (px->row - center) * k.ifov_deg() / k.ns_ground_gain;
    ew_off += dew;
    ns_off += dns;
    if (std::abs(dew) + std::abs(dns) < 1e-10) break;
  }
  return {wrap_counts(std::llround((al.ew_ref_angle_deg + ew_off) / k.encoder_lsb_deg)),
          wrap_counts(std::llround((al.ns_ref_angle_deg + ns_off) / k.encoder_lsb_deg))};
}

EncoderReading centered_origin(const GeodeticPoint& center, const ScanConfig& cfg,
                               const Scenario& sc) {
  const EncoderReading c = pointing_for_target(center, sc, cfg.start_time_s);
  const long long ew = step_counts(cfg.ew_step_deg, sc.consts) * (cfg.cols - 1) / 2;
  const long long ns = step_counts(cfg.ns_step_deg, sc.consts) * (cfg.rows - 1) / 2;
  return {wrap_counts(static_cast<long long>(c.ew_counts) - ew),
          wrap_counts(static_cast<long long>(c.ns_counts) - ns)};
}

std::pair<double, double> relative_shift(const GeometrySnapshot& from, const GeometrySnapshot& to,
                                         const CameraConstants& consts,
                                         const projection::ElevationSource& elev) {
  const double c = (consts.detector_pixels - 1.0) / 2.0;
  const GeodeticPoint g = FrameGeometry(from, consts).geolocate(c, c, elev);
  const auto px = FrameGeometry(to, consts).project(g);
  if (!px) throw OutsideFrame("relative_shift: centre point not visible in target geometry");
  return {px->row - c, px->col - c};
}

projection::Raster render_frame(const Scene& scene, const std::vector<GeometrySnapshot>& truth,
                                const Scenario& sc) {
  const int n = sc.consts.detector_pixels;
  const int step = std::max(1, sc.render_node_step);
  const int nodes = (n - 1 + step - 1) / step + 1;
  projection::Raster img(n, n, static_cast<int>(truth.size()));

  for (std::size_t b = 0; b < truth.size(); ++b) {
    const FrameGeometry geom(truth[b], sc.consts);
    std::vector<double> nx(static_cast<std::size_t>(nodes) * nodes);
    std::vector<double> ny(nx.size());
    parallel_for(nodes, [&](int i) {
      for (int j = 0; j < nodes; ++j) {
        const GeodeticPoint g = geom.geolocate(i * step, j * step, sc.elevation);
        const projection::MapPoint m = scene.lcc().forward(g);
        nx[static_cast<std::size_t>(i) * nodes + j] = m.x;
        ny[static_cast<std::size_t>(i) * nodes + j] = m.y;
      }
    });
    std::span<float> dst = img.band(static_cast<int>(b));
    parallel_for(n, [&](int r) {
      const int i = std::min(r / step, nodes - 2);
      const double tr = static_cast<double>(r - i * step) / step;
      std::vector<double> rx(nodes), ry(nodes);
      for (int j = 0; j < nodes; ++j) {
        const std::size_t a = static_cast<std::size_t>(i) * nodes + j;
        rx[j] = nx[a] * (1.0 - tr) + nx[a + nodes] * tr;
        ry[j] = ny[a] * (1.0 - tr) + ny[a + nodes] * tr;
      }
      for (int c = 0; c < n; ++c) {
        const int j = std::min(c / step, nodes - 2);
        const double tc = static_cast<double>(c - j * step) / step;
        const double x = rx[j] * (1.0 - tc) + rx[j + 1] * tc;
        const double y = ry[j] * (1.0 - tc) + ry[j + 1] * tc;
        dst[static_cast<std::size_t>(r) * n + c] = scene.sample(x, y);
      }
    });
  }
  return img;
}

std::pair<Frame, FrameTruth> acquire_frame(const Scene* scene, const PlannedFrame& planned,
                                           const ScanPlan& plan, const Scenario& sc) {
  sc.noise.validate();
  const ScanConfig& cfg = plan.config;
  if (sc.reference_band < 0 || sc.reference_band >= cfg.band_count)
    throw ConfigurationError("reference band outside the band range");
  const geomodel::AlignmentSet truth_alignment = apply_bias(sc.nominal_alignment, sc.bias);

  Frame frame;
  frame.id = planned.id;
  frame.grid_row = planned.grid_row;
  frame.grid_col = planned.grid_col;
  frame.direction = planned.direction;
  FrameTruth truth;

  for (int b = 0; b < cfg.band_count; ++b) {
    const double t = planned.start_time_s + b * cfg.band_interval_s;
    auto enc_rng = stream(mix(sc.noise.rng_seed) ^ sc.seed, planned.id, b, 1);
    auto att_rng = stream(sc.seed, planned.id, b, 2);
    const EncoderReading realized = sample_encoder(planned.commanded, sc.noise, enc_rng);
    const Attitude att = propagate_platform(t - cfg.start_time_s, sc.drift, sc.base_attitude, &att_rng);
    frame.telemetry.push_back({sc.ephemeris, att, planned.commanded, sc.nominal_alignment, t});
    truth.snapshots.push_back({sc.ephemeris, att, realized, truth_alignment, t});

    TruthRecord rec;
    rec.frame_id = planned.id;
    rec.band = b;
    rec.time_s = t;
    rec.commanded = planned.commanded;
    rec.realized = realized;
    rec.attitude = att;
    truth.records.push_back(rec);
  }

  const double hi = sc.consts.detector_pixels - 0.5;
  for (int b = 0; b < cfg.band_count; ++b) {
    TruthRecord& rec = truth.records[b];
    std::tie(rec.shift_vs_band0_line, rec.shift_vs_band0_pixel) =
        relative_shift(truth.snapshots[0], truth.snapshots[b], sc.consts, sc.elevation);
    std::tie(rec.shift_vs_ref_line, rec.shift_vs_ref_pixel) = relative_shift(
        truth.snapshots[sc.reference_band], truth.snapshots[b], sc.consts, sc.elevation);
    std::tie(rec.knowledge_error_line, rec.knowledge_error_pixel) =
        relative_shift(frame.telemetry[b], truth.snapshots[b], sc.consts, sc.elevation);
    const FrameGeometry g(truth.snapshots[b], sc.consts);
    rec.corners = {g.geolocate(-0.5, -0.5, sc.elevation), g.geolocate(-0.5, hi, sc.elevation),
                   g.geolocate(hi, hi, sc.elevation), g.geolocate(hi, -0.5, sc.elevation)};
  }

  if (sc.render && scene) frame.image = render_frame(*scene, truth.snapshots, sc);
  return {std::move(frame), std::move(truth)};
}

void acquire_scan(const ScanPlan& plan, const Scene* scene, const Scenario& sc,
                  const FrameSink& sink) {
  for (const PlannedFrame& f : plan.frames) {
    auto [frame, truth] = acquire_frame(scene, f, plan, sc);
    sink(std::move(frame), std::move(truth));
  }
}

ScanResult acquire_scan(const ScanPlan& plan, const Scene* scene, const Scenario& sc) {
  ScanResult out;
  acquire_scan(plan, scene, sc, [&](Frame&& f, FrameTruth&& t) {
    out.frames.push_back(std::move(f));
    out.truth.push_back(std::move(t));
  });
  return out;
}

}  // namespace ghrc::sim
