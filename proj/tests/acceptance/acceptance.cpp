// Closed-loop acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails. `acceptance 3 9` runs a subset;
// `--known-fail N` still reports criterion N but keeps it out of the exit code.

#include <Eigen/LU>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ghrc/cli.hpp"
#include "ghrc/error.hpp"
#include "ghrc/geomodel.hpp"
#include "ghrc/lcc.hpp"
#include "ghrc/mosaic.hpp"
#include "ghrc/registration.hpp"
#include "ghrc/resample.hpp"
#include "ghrc/resection.hpp"
#include "ghrc/scene.hpp"
#include "ghrc/serialize.hpp"
#include "ghrc/simulator.hpp"

namespace fs = std::filesystem;
using namespace ghrc;
using geomodel::GeodeticPoint;
using geomodel::GeometrySnapshot;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double ground_distance_m(const GeodeticPoint& a, const GeodeticPoint& b) {
  return (geodesy::geodetic_to_ecef(a) - geodesy::geodetic_to_ecef(b)).norm() * 1e3;
}

// Flight-like scenario: +/-5 count encoder noise, 1e-5 deg/s drift on both axes.
sim::Scenario flight_scenario(std::uint64_t seed) {
  sim::Scenario sc;
  sc.noise.pp_counts = 5;
  sc.noise.rng_seed = seed;
  sc.drift = {1e-5, 1e-5, 0.0};
  sc.seed = seed;
  sc.reference_band = 2;
  return sc;
}

sim::ScanConfig scan_5x5(const sim::Scenario& sc, int bands) {
  sim::ScanConfig cfg;
  cfg.rows = 5;
  cfg.cols = 5;
  cfg.band_count = bands;
  cfg.origin = sim::centered_origin({24.0, 80.0, 0.0}, cfg, sc);
  return cfg;
}

GeometrySnapshot pointed_snapshot(const GeodeticPoint& target) {
  sim::Scenario sc;
  GeometrySnapshot s;
  s.ephemeris = sc.ephemeris;
  s.alignment = sc.nominal_alignment;
  s.encoder = sim::pointing_for_target(target, sc);
  return s;
}

// ---------------------------------------------------------------------------
// 1 + 2: one 5 x 5 six-band scan, band registration streamed per frame.

struct BbrRun {
  bool done = false;
  std::vector<double> residuals;  // per non-reference band, px (inf if uncorrectable)
  std::vector<std::pair<double, double>> truth_shifts;  // (line, pixel) vs reference
  double seconds = 0.0;
};

BbrRun& bbr_run() {
  static BbrRun run;
  if (run.done) return run;
  const auto t0 = std::chrono::steady_clock::now();
  const sim::Scenario sc = flight_scenario(20240601);
  const sim::ScanConfig cfg = scan_5x5(sc, 6);
  sim::FractalParams fp;
  fp.seed = 20240601;
  const sim::ProceduralScene scene(projection::LccParams{}, fp);
  registration::BbrOptions opt;
  opt.reference_band = sc.reference_band;
  sim::acquire_scan(sim::plan_raster_scan(cfg, sc.consts), &scene, sc,
                    [&](sim::Frame&& f, sim::FrameTruth&& t) {
                      const auto r = registration::bbr_estimate_and_correct(f.image, opt);
                      for (const auto& b : r.bands) {
                        if (b.band == opt.reference_band) continue;
                        const auto& rec = t.records[static_cast<std::size_t>(b.band)];
                        run.truth_shifts.emplace_back(rec.shift_vs_ref_line, rec.shift_vs_ref_pixel);
                        run.residuals.push_back(
                            b.uncorrectable
                                ? std::numeric_limits<double>::infinity()
                                : std::hypot(b.estimate.d_line - rec.shift_vs_ref_line,
                                             b.estimate.d_pixel - rec.shift_vs_ref_pixel));
                      }
                    });
  run.seconds = seconds_since(t0);
  run.done = true;
  return run;
}

Outcome c1_bbr_residual() {
  const BbrRun& run = bbr_run();
  const auto n = run.residuals.size();
  const auto good = std::count_if(run.residuals.begin(), run.residuals.end(),
                                  [](double r) { return r <= 0.25; });
  std::vector<double> sorted = run.residuals;
  std::sort(sorted.begin(), sorted.end());
  const double p98 = sorted[std::min(n - 1, static_cast<std::size_t>(std::ceil(0.98 * n)) - 1)];
  const double frac = static_cast<double>(good) / static_cast<double>(n);
  return {frac >= 0.98 && run.seconds < 600.0,
          fmt("%zu band pairs, %.1f%% <= 0.25 px, CE98 %.3f px, max %.3f px, %.0f s", n,
              100.0 * frac, p98, sorted.back(), run.seconds)};
}

Outcome c2_bbr_budget() {
  // Truth-only scans (no rendering) with fresh seeds extend the sample past
  // 10^4 band pairs.
  std::vector<std::pair<double, double>> shifts = bbr_run().truth_shifts;
  for (std::uint64_t seed = 1; shifts.size() < 12000; ++seed) {
    sim::Scenario sc = flight_scenario(1000 + seed);
    sc.render = false;
    const auto cfg = scan_5x5(sc, 6);
    sim::acquire_scan(sim::plan_raster_scan(cfg, sc.consts), nullptr, sc,
                      [&](sim::Frame&&, sim::FrameTruth&& t) {
                        for (const auto& r : t.records)
                          if (r.band != sc.reference_band)
                            shifts.emplace_back(r.shift_vs_ref_line, r.shift_vs_ref_pixel);
                      });
  }
  double max_ew = 0.0, max_ns = 0.0;
  for (const auto& [l, p] : shifts) {
    max_ew = std::max(max_ew, std::abs(p));
    max_ns = std::max(max_ns, std::abs(l));
  }
  const bool pass = max_ew <= 40.0 && max_ns <= 20.0 && max_ew >= 30.0 && shifts.size() >= 10000;
  return {pass, fmt("%zu band pairs, max |EW| %.2f px (<= 40, >= 30), max |NS| %.2f px (<= 20)",
                    shifts.size(), max_ew, max_ns)};
}

// ---------------------------------------------------------------------------

Outcome c3_encoder_to_pixel() {
  // On the ground at the sub-satellite point, where one detector pixel spans
  // one nadir GSD.
  geomodel::CameraConstants k;
  const auto snap = pointed_snapshot({0.0, 55.0, 0.0});
  const double c = (k.detector_pixels - 1) / 2.0;
  auto ew = snap, ns = snap;
  ew.encoder.ew_counts += 15;
  ns.encoder.ns_counts += 15;
  const auto p0 = geomodel::geolocate(c, c, snap, k);
  const double d_ew = ground_distance_m(p0, geomodel::geolocate(c, c, ew, k)) / k.nadir_gsd_m();
  const double d_ns = ground_distance_m(p0, geomodel::geolocate(c, c, ns, k)) / k.nadir_gsd_m();
  // In detector pixels of the unshifted frame at the scan centre (24N 80E).
  const auto s2 = pointed_snapshot({24.0, 80.0, 0.0});
  auto e2 = s2, n2 = s2;
  e2.encoder.ew_counts += 15;
  n2.encoder.ns_counts += 15;
  const geomodel::FrameGeometry g(s2, k);
  const auto pe = g.ground_to_pixel(geomodel::geolocate(c, c, e2, k));
  const auto pn = g.ground_to_pixel(geomodel::geolocate(c, c, n2, k));
  const double px_ew = std::hypot(pe.row - c, pe.col - c), px_ns = std::hypot(pn.row - c, pn.col - c);
  const bool pass = std::abs(d_ew - 60.0) <= 3.0 && std::abs(d_ns - 30.0) <= 1.5 &&
                    std::abs(px_ew - 60.0) <= 3.0 && std::abs(px_ns - 30.0) <= 1.5;
  return {pass, fmt("ground/nadir GSD: EW %.2f NS %.2f; detector px at 24N: EW %.2f NS %.2f", d_ew,
                    d_ns, px_ew, px_ns)};
}

Outcome c4_drift() {
  sim::Scenario sc;
  const auto s = pointed_snapshot({0.0, 55.0, 0.0});
  const double c = (sc.consts.detector_pixels - 1) / 2.0;
  const auto p0 = geomodel::geolocate(c, c, s, sc.consts);
  bool pass = true;
  std::string detail;
  for (const auto& [name, d] : {std::pair{"roll", sim::DriftModel{1e-5, 0.0, 0.0}},
                                std::pair{"pitch", sim::DriftModel{0.0, 1e-5, 0.0}}}) {
    auto moved = s;
    moved.attitude = sim::propagate_platform(20.0, d, {});
    const double m = ground_distance_m(p0, geomodel::geolocate(c, c, moved, sc.consts));
    pass = pass && std::abs(m - 124.9) <= 1.0;
    detail += fmt("%s %.2f m (%.2f nadir px) ", name, m, m / sc.consts.nadir_gsd_m());
  }
  return {pass, detail + "after 20 s at 1e-5 deg/s"};
}

Outcome c5_overlap() {
  geomodel::CameraConstants k;
  mosaic::FramePointing a, b;
  b.id = 1;
  b.grid_col = 1;
  b.m_pitch_deg = 0.07;
  const double eq = mosaic::overlap_with_previous(b, a, k);

  // Noiseless pair: predicted from telemetry, measured with the true geometry
  // by projecting the east frame's west edge into the west frame.
  sim::Scenario sc;
  sc.noise.pp_counts = 0;
  sc.drift = {0.0, 0.0, 0.0};
  sc.render = false;
  sim::ScanConfig cfg;
  cfg.rows = 1;
  cfg.cols = 2;
  cfg.band_count = 1;
  sc.reference_band = 0;
  cfg.origin = sim::centered_origin({24.0, 80.0, 0.0}, cfg, sc);
  const auto scan = sim::acquire_scan(sim::plan_raster_scan(cfg, k), nullptr, sc);
  const auto& w = scan.frames[0];
  const auto& e = scan.frames[1];
  const auto pw = mosaic::pointing_from_telemetry(0, 0, 0, w.direction, w.telemetry[0], k);
  const auto pe = mosaic::pointing_from_telemetry(1, 0, 1, e.direction, e.telemetry[0], k);
  const double predicted = mosaic::overlap_with_previous(pe, pw, k);
  const geomodel::FrameGeometry gw(scan.truth[0].snapshots[0], k), ge(scan.truth[1].snapshots[0], k);
  const int n = k.detector_pixels;
  double measured = 0.0;
  for (double row : {0.25 * n, 0.5 * n, 0.75 * n}) {
    const auto px = gw.ground_to_pixel(ge.geolocate(row, -0.5));
    measured += (n - 0.5 - px.col) / n / 3.0;
  }
  const double rel = std::abs(measured - predicted) / predicted;
  return {std::abs(eq - 0.2045) <= 1e-4 && rel <= 0.01,
          fmt("formula at 0.07 deg: %.5f; noiseless pair predicted %.5f measured %.5f (%.2f%%)", eq,
              predicted, measured, 100.0 * rel)};
}

Outcome c6_resection() {
  geomodel::CameraConstants k;
  const auto nominal = pointed_snapshot({24.0, 80.0, 0.0});
  auto truth = nominal;
  truth.alignment.mirrorcube_to_instr_roll_deg += 0.16;
  truth.alignment.mirrorcube_to_instr_pitch_deg -= 0.59;
  const geomodel::FrameGeometry g(truth, k);
  resection::ResectionProblem pb;
  pb.snapshot = nominal;
  pb.consts = k;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double r = (i + 0.5) * k.detector_pixels / 3.0 - 0.5;
      const double c = (j + 0.5) * k.detector_pixels / 3.0 - 0.5;
      pb.points.push_back({r, c, g.geolocate(r, c), 1.0});
    }
  const auto res = resection::resect(pb);
  const double er = res.values(0) - truth.alignment.mirrorcube_to_instr_roll_deg;
  const double ep = res.values(1) - truth.alignment.mirrorcube_to_instr_pitch_deg;
  return {res.converged && std::abs(er) < 2e-4 && std::abs(ep) < 2e-4 && res.iterations <= 15,
          fmt("roll %+.6f pitch %+.6f deg (errors %.1e, %.1e), %d iterations, rms %.3g m",
              res.values(0), res.values(1), er, ep, res.iterations, res.final_rms_m)};
}

struct CalibrationLoop {
  double before_m = 0.0;     // mean GCP location error with telemetry
  double after_max_m = 0.0;  // worst GCP error after calibration
  double fitted_ew_deg = 0.0;
  bool converged = false;
};

// Noiseless encoders and no drift: the reference-angle bias is the only
// error, so it is what calibration must remove.
CalibrationLoop calibration_loop(const GeodeticPoint& centre) {
  sim::Scenario sc;
  sc.noise.pp_counts = 0;
  sc.drift = {0.0, 0.0, 0.0};
  sc.render = false;
  sc.reference_band = 0;
  sim::ScanConfig cfg;
  cfg.rows = 3;
  cfg.cols = 3;
  cfg.band_count = 1;
  cfg.origin = sim::centered_origin(centre, cfg, sc);  // from the believed alignment
  sc.bias.ew_ref_deg = 0.16;
  const auto scan = sim::acquire_scan(sim::plan_raster_scan(cfg, sc.consts), nullptr, sc);
  const auto& k = sc.consts;
  std::vector<resection::FrameObservations> frames;
  for (std::size_t f = 0; f < scan.frames.size(); ++f) {
    const geomodel::FrameGeometry truth(scan.truth[f].snapshots[0], k);
    resection::FrameObservations obs{scan.frames[f].telemetry[0], {}};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const double r = (i + 0.5) * k.detector_pixels / 3.0 - 0.5;
        const double c = (j + 0.5) * k.detector_pixels / 3.0 - 0.5;
        obs.points.push_back({r, c, truth.geolocate(r, c), 1.0});
      }
    frames.push_back(std::move(obs));
  }
  const auto res = resection::calibrate_alignment(frames, k, {});
  CalibrationLoop out;
  out.converged = res.converged;
  out.fitted_ew_deg = res.ew_ref_deg - res.ew_ref_before_deg;
  int count = 0;
  for (const auto& f : frames) {
    auto fixed = f.snapshot;
    fixed.alignment.ew_ref_angle_deg = res.ew_ref_deg;
    fixed.alignment.ns_ref_angle_deg = res.ns_ref_deg;
    const geomodel::FrameGeometry g0(f.snapshot, k), g1(fixed, k);
    for (const auto& p : f.points) {
      out.before_m += ground_distance_m(g0.geolocate(p.row, p.col), p.target);
      out.after_max_m = std::max(out.after_max_m, ground_distance_m(g1.geolocate(p.row, p.col), p.target));
      ++count;
    }
  }
  out.before_m /= count;
  return out;
}

Outcome c7_calibration() {
  // The 200 km scale is the nadir one (0.16 deg doubled by the mirror, seen
  // from 35786 km); the oblique view of 24N stretches it, so it is checked
  // at the sub-satellite point and reported for 24N 80E.
  const auto nadir = calibration_loop({0.0, 55.0, 0.0});
  const auto oblique = calibration_loop({24.0, 80.0, 0.0});
  const double px = geomodel::CameraConstants{}.nadir_gsd_m();
  const bool pass = std::abs(nadir.before_m / 200e3 - 1.0) <= 0.05 && nadir.after_max_m < px &&
                    oblique.after_max_m < px && nadir.converged && oblique.converged;
  return {pass, fmt("sub-satellite: %.1f km before, max %.3f m after; 24N 80E: %.1f km before, "
                    "max %.3f m after (1 px = %.1f m); fitted EW ref %+.5f deg",
                    nadir.before_m / 1e3, nadir.after_max_m, oblique.before_m / 1e3,
                    oblique.after_max_m, px, nadir.fitted_ew_deg)};
}

// ---------------------------------------------------------------------------

Outcome c8_mosaic() {
  sim::Scenario sc = flight_scenario(8);
  sc.reference_band = 0;
  const sim::ScanConfig cfg = scan_5x5(sc, 1);
  const auto plan = sim::plan_raster_scan(cfg, sc.consts);
  projection::LccParams lcc;
  const projection::Lcc proj(lcc);

  // Mask the union of the 2 x 2 block at rows 3-4, cols 1-2 (true footprints,
  // widened by 3 km).
  const std::set<int> block = {plan.index_of(3, 1), plan.index_of(3, 2), plan.index_of(4, 1),
                               plan.index_of(4, 2)};
  sim::Scenario dry = sc;
  dry.render = false;
  const auto geom = sim::acquire_scan(plan, nullptr, dry);
  const auto corner = [&](int r, int c, int k) {
    return proj.forward(geom.truth[static_cast<std::size_t>(plan.index_of(r, c))].records[0].corners[k]);
  };
  sim::MaskedScene::Quad quad = {corner(3, 1, 0), corner(3, 2, 1), corner(4, 2, 2), corner(4, 1, 3)};
  projection::MapPoint mid{0.0, 0.0};
  for (const auto& q : quad) mid = {mid.x + q.x / 4, mid.y + q.y / 4};
  for (auto& q : quad) {
    const double dx = q.x - mid.x, dy = q.y - mid.y, d = std::hypot(dx, dy);
    q = {q.x + dx / d * 3000.0 * std::sqrt(2.0), q.y + dy / d * 3000.0 * std::sqrt(2.0)};
  }
  sim::FractalParams fp;
  fp.seed = 8;
  auto base = std::make_shared<sim::ProceduralScene>(lcc, fp);
  const sim::MaskedScene scene(base, {quad}, 100.0f);
  const auto scan = sim::acquire_scan(plan, &scene, sc);

  std::vector<mosaic::MosaicFrame> frames;
  std::vector<GeometrySnapshot> telemetry;
  std::vector<mosaic::FramePointing> pointing;
  for (const auto& f : scan.frames) {
    frames.push_back({mosaic::pointing_from_telemetry(f.id, f.grid_row, f.grid_col, f.direction,
                                                      f.telemetry[0], sc.consts),
                      f.telemetry[0], &f.image});
    telemetry.push_back(f.telemetry[0]);
    pointing.push_back(frames.back().pointing);
  }
  mosaic::MosaicOptions opt;
  opt.lcc = lcc;
  opt.gsd_m = 100.0;
  const auto refs =
      mosaic::select_references(pointing, mosaic::image_correlator(frames, sc.consts, {}, opt),
                                opt.threshold);
  const auto before = mosaic::seam_metric(frames, telemetry, sc.consts, {}, opt);
  const auto result = mosaic::build_mosaic(frames, refs, sc.consts, {}, opt);
  const auto after = mosaic::seam_metric(frames, result.corrected, sc.consts, {}, opt);

  // Report listing, as the mosaic command writes it.
  nlohmann::json report = {{"corrections", result.corrections}};
  std::set<int> listed;
  for (const auto& c : report["corrections"])
    if (c["mode"] == "system") listed.insert(c["frame_id"].get<int>());
  const bool block_flagged = std::includes(listed.begin(), listed.end(), block.begin(), block.end());
  std::string flagged;
  for (int id : listed) flagged += (flagged.empty() ? "" : ",") + std::to_string(id);
  double max_before = 0.0;
  for (const auto& e : before.edges)
    if (e.confident) max_before = std::max(max_before, e.magnitude_px);
  return {max_before >= 10.0 && after.rms_px < 1.0 && after.confident_edges > 0 && block_flagged,
          fmt("max seam before %.2f px; after rms %.3f px max %.3f px over %d confident edges; "
              "system-only {%s}, masked block %s",
              max_before, after.rms_px, after.max_px, after.confident_edges, flagged.c_str(),
              block_flagged ? "flagged" : "NOT flagged")};
}

Outcome c9_algorithm1() {
  // The scripted row is the second row of a 2 x 5 scan, so that frames have
  // a frame above them; frames 2 and 3 of the row fail every correlation and
  // frame 4 anchors on the frame above.
  std::vector<mosaic::FramePointing> frames;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 5; ++c) {
      mosaic::FramePointing p;
      p.id = r * 5 + c;
      p.grid_row = r;
      p.grid_col = c;
      frames.push_back(p);
    }
  using mosaic::Relation;
  const std::set<std::tuple<int, int, Relation>> fails = {
      {7, 6, Relation::Neighbour}, {7, 2, Relation::Up},  {8, 7, Relation::Neighbour},
      {8, 3, Relation::Up},        {9, 8, Relation::Neighbour}};
  std::vector<std::string> trace;
  const mosaic::Correlator table = [&](int cur, int ref, Relation rel) -> std::optional<mosaic::Match> {
    trace.push_back(fmt("%d->%d%c", cur, ref, rel == Relation::Up ? 'u' : rel == Relation::Opposite ? 'o' : 'n'));
    mosaic::Match m;
    m.shift.confidence = fails.count({cur, ref, rel}) ? 1.0 : 10.0;
    return m;
  };
  const auto plan = mosaic::select_references(frames, table, 1.5);
  // Hand trace: (neighbour, up, opposite, reference) per frame.
  struct Flags {
    bool n, u, o;
    int ref;
  };
  const std::vector<Flags> expect = {{0, 0, 0, -1}, {1, 0, 0, 0}, {1, 0, 0, 1}, {1, 0, 0, 2},
                                     {1, 0, 0, 3},  {0, 1, 0, 0}, {1, 0, 0, 5}, {0, 0, 1, 8},
                                     {0, 0, 1, 9},  {0, 1, 0, 4}};
  bool pass = plan.entries.size() == expect.size();
  std::string got;
  for (std::size_t i = 0; pass && i < expect.size(); ++i) {
    const auto& e = plan.entries[i];
    const int ref = e.reference ? *e.reference : -1;
    pass = e.take_neighbour == expect[i].n && e.take_up == expect[i].u &&
           e.take_opposite == expect[i].o && ref == expect[i].ref;
  }
  for (std::size_t i = 5; i < plan.entries.size(); ++i) {
    const auto& e = plan.entries[i];
    got += fmt("%zu:%s%d ", i - 5,
               e.take_neighbour ? "N" : e.take_up ? "U" : e.take_opposite ? "O" : "S",
               e.reference ? *e.reference - (e.take_up ? 0 : 5) : -1);
  }
  const std::vector<std::string> tail(trace.end() - 2, trace.end());
  pass = pass && tail == std::vector<std::string>{"8->9o", "7->8o"};
  return {pass, "row flags " + got + "(U = frame above by scan id); chain " + tail[0] + " " + tail[1]};
}

Outcome c10_invariants() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> ang(-360.0, 360.0);
  std::normal_distribution<double> g;
  double rot = 0.0, refl = 0.0, round = 0.0, lcc_err = 0.0, knot = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const geomodel::Mat3 r = geomodel::rot_x(ang(rng)) * geomodel::rot_y(ang(rng)) * geomodel::rot_z(ang(rng));
    rot = std::max({rot, (r.transpose() * r - geomodel::Mat3::Identity()).cwiseAbs().maxCoeff(),
                    std::abs(r.determinant() - 1.0)});
    const geomodel::Vec3 u(g(rng), g(rng), g(rng));
    const geomodel::Vec3 n = geomodel::Vec3(g(rng), g(rng), g(rng)).normalized();
    refl = std::max(refl, (geomodel::reflect(geomodel::reflect(u, n), n) - u).norm() / std::max(1.0, u.norm()));
  }
  geomodel::CameraConstants k;
  std::uniform_real_distribution<double> px(-0.5, k.detector_pixels - 0.5), small(-0.05, 0.05);
  for (int f = 0; f < 10; ++f) {
    auto snap = pointed_snapshot({15.0 + 2 * f, 70.0 + 2 * f, 0.0});
    snap.attitude = {small(rng), small(rng), small(rng)};
    snap.alignment.mirrorcube_to_instr_pitch_deg = small(rng);
    const geomodel::FrameGeometry geo(snap, k);
    for (int i = 0; i < 100; ++i) {
      const double r = px(rng), c = px(rng);
      const auto back = geo.ground_to_pixel(geo.geolocate(r, c));
      round = std::max({round, std::abs(back.row - r), std::abs(back.col - c)});
    }
  }
  const projection::Lcc lcc;
  std::uniform_real_distribution<double> lat(-10.0, 70.0), lon(40.0, 120.0);
  for (int i = 0; i < 10000; ++i) {
    const double la = lat(rng), lo = lon(rng);
    const auto m = lcc.forward(la, lo);
    const auto p = lcc.inverse(m.x, m.y);
    lcc_err = std::max({lcc_err, std::abs(p.lat_deg - la), std::abs(p.lon_deg - lo)});
  }
  projection::Raster ras(64, 48, 1);
  std::uniform_real_distribution<float> val(-1000.0f, 1000.0f);
  for (auto& v : ras.data()) v = val(rng);
  for (int i = 0; i < 48; ++i)
    for (int j = 0; j < 64; ++j)
      knot = std::max(knot, std::abs(double(projection::sample_bicubic(ras, 0, i, j)) - ras.at(i, j)));
  const double secs = seconds_since(t0);
  return {rot < 1e-12 && refl < 1e-12 && round < 1e-3 && lcc_err < 1e-9 && knot == 0.0 && secs < 60.0,
          fmt("rotation %.1e, reflection %.1e, geolocate round trip %.1e px, LCC %.1e deg, "
              "bicubic knots %.1e, %.1f s",
              rot, refl, round, lcc_err, knot, secs)};
}

// ---------------------------------------------------------------------------

std::map<std::string, std::string> snapshot_tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    files[fs::relative(e.path(), root).string()] = {std::istreambuf_iterator<char>(in), {}};
  }
  return files;
}

Outcome c11_determinism() {
  const fs::path config = fs::path(GHRC_SOURCE_DIR) / "configs" / "demo.yaml";
  const fs::path base = fs::temp_directory_path() / "ghrc_acceptance_determinism";
  fs::remove_all(base);
  std::vector<std::map<std::string, std::string>> trees;
  std::string codes;
  bool eval_ok = true;
  for (const char* run : {"a", "b"}) {
    const fs::path out = base / run;
    for (const char* cmd : {"simulate", "bbr", "georef", "calibrate", "mosaic", "eval"}) {
      const int code = cli::run_command(cmd, config, out, std::nullopt, std::nullopt);
      codes += fmt("%s=%d ", cmd, code);
      if (std::string(cmd) == "eval" && code != cli::kExitOk) eval_ok = false;
    }
    trees.push_back(snapshot_tree(out));
    codes += "| ";
  }
  std::vector<std::string> differing;
  for (const auto& [name, bytes] : trees[0]) {
    const auto it = trees[1].find(name);
    if (it == trees[1].end() || it->second != bytes) differing.push_back(name);
  }
  for (const auto& [name, bytes] : trees[1])
    if (!trees[0].count(name)) differing.push_back(name);
  std::string diff;
  for (const auto& d : differing) diff += " " + d;
  return {differing.empty() && eval_ok && trees[0].size() > 10,
          fmt("%zu files compared, %zu differ%s; eval %s", trees[0].size(), differing.size(),
              diff.c_str(), eval_ok ? "PASS" : "FAIL")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"BBR residual", c1_bbr_residual},
      {"BBR error budget", c2_bbr_budget},
      {"encoder-to-pixel consistency", c3_encoder_to_pixel},
      {"drift magnitude", c4_drift},
      {"overlap prediction", c5_overlap},
      {"resection recovery", c6_resection},
      {"calibration-scale check", c7_calibration},
      {"mosaic seam correction", c8_mosaic},
      {"reference selection trace", c9_algorithm1},
      {"geometric invariants", c10_invariants},
      {"determinism", c11_determinism},
  };
  std::set<int> only, known;
  for (int i = 1; i < argc; ++i) {
    if (std::string(argv[i]) == "--known-fail" && i + 1 < argc) known.insert(std::atoi(argv[++i]));
    else only.insert(std::atoi(argv[i]));
  }
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass && !known.count(id)) ++failed;
    std::printf("criterion %2d %-30s %s  %s%s\n", id, criteria[i].first, o.pass ? "PASS" : "FAIL",
                o.detail.c_str(), !o.pass && known.count(id) ? " [known failure, see README]" : "");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
