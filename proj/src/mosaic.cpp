#include "ghrc/mosaic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "ghrc/error.hpp"
#include "ghrc/parallel.hpp"

namespace ghrc::mosaic {

using projection::GridSpec;
using projection::GridWindow;
using projection::MapBox;
using projection::Raster;
using registration::Image;

FramePointing pointing_from_telemetry(int id, int grid_row, int grid_col, ScanDirection dir,
                                      const GeometrySnapshot& snap, const CameraConstants& consts) {
  const auto mp = geomodel::mirror_pointing(snap.encoder, consts);
  return {id, grid_row, grid_col, dir, mp.m_roll_deg, mp.m_pitch_deg, snap.attitude.roll_deg,
          snap.attitude.pitch_deg};
}

namespace {

double platform_term(double dp_deg, const CameraConstants& consts) {
  return std::tan(std::abs(dp_deg) * geodesy::kDegToRad) * consts.altitude_km / consts.igfov_km;
}

}  // namespace

double overlap_with_previous(const FramePointing& curr, const FramePointing& prev,
                             const CameraConstants& consts) {
  if (curr.grid_row != prev.grid_row || std::abs(curr.grid_col - prev.grid_col) != 1)
    throw DomainError("overlap_with_previous: frames are not EW neighbours");
  const double raw = 1.0 - consts.ew_ground_gain * std::abs(curr.m_pitch_deg - prev.m_pitch_deg) /
                               consts.fov_deg +
                     platform_term(curr.p_pitch_deg - prev.p_pitch_deg, consts);
  return std::clamp(raw, 0.0, 1.0);
}

double raw_overlap_with_up(const FramePointing& curr, const FramePointing& up,
                           const CameraConstants& consts, OverlapMode mode) {
  if (up.grid_col != curr.grid_col || up.grid_row != curr.grid_row - 1)
    throw DomainError("overlap_with_up: frames are not NS neighbours");
  const double gain = mode == OverlapMode::PaperExact ? 2.0 : consts.ns_ground_gain;
  return 1.0 - gain * std::abs(curr.m_roll_deg - up.m_roll_deg) / consts.fov_deg +
         platform_term(curr.p_roll_deg - up.p_roll_deg, consts);
}

double overlap_with_up(const FramePointing& curr, const FramePointing& up,
                       const CameraConstants& consts, OverlapMode mode) {
  return std::clamp(raw_overlap_with_up(curr, up, consts, mode), 0.0, 1.0);
}

namespace {

int pow2_floor(int v) {
  int p = 1;
  while (p * 2 <= v) p *= 2;
  return p;
}

}  // namespace

ChipPair extract_overlap_chips(const Raster& cur_img, int cur_band,
                               const geomodel::FrameGeometry& cur_geom, const Raster& ref_img,
                               int ref_band, const geomodel::FrameGeometry& ref_geom, Side side,
                               double fraction, const projection::ElevationSource& elev) {
  if (!(fraction > 0.05)) throw InsufficientOverlap("predicted overlap below 5%");
  const int n_rows = cur_img.height(), n_cols = cur_img.width();
  const bool across_cols = side != Side::Up;
  const int extent = across_cols ? n_cols : n_rows;
  const int along = across_cols ? n_rows : n_cols;
  const double strip = std::min(fraction, 1.0) * extent;
  const int thin = std::min(256, pow2_floor(static_cast<int>(strip)));
  const int longd = std::min(1024, pow2_floor(along));
  if (thin < 32) throw InsufficientOverlap("overlap strip narrower than 32 px");

  const double strip_centre = side == Side::Right ? extent - strip / 2.0 : strip / 2.0;
  const int h = across_cols ? longd : thin;
  const int w = across_cols ? thin : longd;
  const double cr = across_cols ? n_rows / 2.0 : strip_centre;
  const double cc = across_cols ? strip_centre : n_cols / 2.0;

  ChipPair out;
  out.cur_row0 = std::clamp(static_cast<int>(std::lround(cr - h / 2.0)), 0, n_rows - h);
  out.cur_col0 = std::clamp(static_cast<int>(std::lround(cc - w / 2.0)), 0, n_cols - w);

  const double mid_r = out.cur_row0 + (h - 1) / 2.0, mid_c = out.cur_col0 + (w - 1) / 2.0;
  const auto px = ref_geom.project(cur_geom.geolocate(mid_r, mid_c, elev));
  if (!px) throw InsufficientOverlap("overlap centre not visible in the reference frame");
  const int r0 = static_cast<int>(std::lround(px->row - (h - 1) / 2.0));
  const int c0 = static_cast<int>(std::lround(px->col - (w - 1) / 2.0));
  out.ref_row0 = std::clamp(r0, 0, ref_img.height() - h);
  out.ref_col0 = std::clamp(c0, 0, ref_img.width() - w);
  if (std::abs(out.ref_row0 - r0) > h / 4 || std::abs(out.ref_col0 - c0) > w / 4)
    throw InsufficientOverlap("predicted overlap falls outside the reference frame");

  out.current = Image::from_raster(cur_img, cur_band, out.cur_row0, out.cur_col0, h, w);
  out.reference = Image::from_raster(ref_img, ref_band, out.ref_row0, out.ref_col0, h, w);
  return out;
}

RefPlan select_references(const std::vector<FramePointing>& frames, const Correlator& correlate,
                          double threshold) {
  RefPlan plan;
  plan.entries.resize(frames.size());
  std::map<std::pair<int, int>, int> at;
  for (std::size_t i = 0; i < frames.size(); ++i)
    at[{frames[i].grid_row, frames[i].grid_col}] = static_cast<int>(i);

  auto confident = [&](const std::optional<Match>& m) {
    return m && m->shift.confidence >= threshold;
  };

  std::vector<int> pending;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const int i = static_cast<int>(k);
    const FramePointing& f = frames[k];
    const bool same_row = i > 0 && frames[k - 1].grid_row == f.grid_row &&
                          std::abs(frames[k - 1].grid_col - f.grid_col) == 1;
    if (i > 0 && frames[k - 1].grid_row != f.grid_row) pending.clear();

    RefEntry& e = plan.entries[k];
    if (same_row) {
      auto m = correlate(i, i - 1, Relation::Neighbour);
      if (confident(m)) {
        e.take_neighbour = true;
        e.reference = i - 1;
        e.match = m;
        pending.clear();
        continue;
      }
    }
    const auto up = at.find({f.grid_row - 1, f.grid_col});
    if (up != at.end()) {
      auto m = correlate(i, up->second, Relation::Up);
      if (confident(m)) {
        e.take_up = true;
        e.reference = up->second;
        e.match = m;
        int successor = i;
        for (auto it = pending.rbegin(); it != pending.rend(); ++it) {
          auto mo = correlate(*it, successor, Relation::Opposite);
          if (!confident(mo)) break;
          RefEntry& pe = plan.entries[static_cast<std::size_t>(*it)];
          pe.take_opposite = true;
          pe.reference = successor;
          pe.match = mo;
          successor = *it;
        }
        pending.clear();
        continue;
      }
    }
    pending.push_back(i);
  }
  return plan;
}

Correlator image_correlator(const std::vector<MosaicFrame>& frames, const CameraConstants& consts,
                            const projection::ElevationSource& elev, const MosaicOptions& opt) {
  return [&frames, consts, elev, opt](int cur, int ref, Relation rel) -> std::optional<Match> {
    const MosaicFrame& c = frames.at(static_cast<std::size_t>(cur));
    const MosaicFrame& r = frames.at(static_cast<std::size_t>(ref));
    try {
      Side side;
      double fraction;
      if (rel == Relation::Up) {
        side = Side::Up;
        fraction = overlap_with_up(c.pointing, r.pointing, consts, opt.overlap_mode);
      } else {
        side = r.pointing.grid_col < c.pointing.grid_col ? Side::Left : Side::Right;
        fraction = overlap_with_previous(c.pointing, r.pointing, consts);
      }
      const geomodel::FrameGeometry cg(c.snapshot, consts), rg(r.snapshot, consts);
      const ChipPair chips =
          extract_overlap_chips(*c.image, opt.band, cg, *r.image, opt.band, rg, side, fraction, elev);
      registration::PhaseCorrelationOptions po = opt.phase;
      po.threshold = opt.threshold;
      Match m;
      m.shift = registration::phase_correlate(chips.reference, chips.current, po);
      m.cur_row0 = chips.cur_row0;
      m.cur_col0 = chips.cur_col0;
      m.ref_row0 = chips.ref_row0;
      m.ref_col0 = chips.ref_col0;
      m.rows = chips.current.rows;
      m.cols = chips.current.cols;
      return m;
    } catch (const Error&) {
      return std::nullopt;
    }
  };
}

namespace {

const char* mode_name(const RefEntry& e) {
  if (e.take_neighbour) return "neighbour";
  if (e.take_up) return "up";
  if (e.take_opposite) return "opposite";
  return "system";
}

GridWindow window_for(const MapBox& box, const GridSpec& grid) {
  const auto& t = grid.transform;
  const int c0 = std::max(0, static_cast<int>(std::floor((box.xmin - t.x0) / t.dx)));
  const int c1 = std::min(grid.width, static_cast<int>(std::ceil((box.xmax - t.x0) / t.dx)));
  const int r0 = std::max(0, static_cast<int>(std::floor((box.ymax - t.y0) / t.dy)));
  const int r1 = std::min(grid.height, static_cast<int>(std::ceil((box.ymin - t.y0) / t.dy)));
  return {r0, c0, std::max(0, r1 - r0), std::max(0, c1 - c0)};
}

MapBox unite(const MapBox& a, const MapBox& b) {
  return {std::min(a.xmin, b.xmin), std::max(a.xmax, b.xmax), std::min(a.ymin, b.ymin),
          std::max(a.ymax, b.ymax)};
}

MapBox intersect(const MapBox& a, const MapBox& b) {
  return {std::max(a.xmin, b.xmin), std::min(a.xmax, b.xmax), std::max(a.ymin, b.ymin),
          std::min(a.ymax, b.ymax)};
}

}  // namespace

MosaicResult build_mosaic(const std::vector<MosaicFrame>& frames, const RefPlan& plan,
                          const CameraConstants& consts, const projection::ElevationSource& elev,
                          const MosaicOptions& opt) {
  if (frames.empty()) throw DomainError("build_mosaic: no frames");
  if (plan.entries.size() != frames.size())
    throw DomainError("build_mosaic: reference plan does not cover every frame");
  const int bands = frames.front().image->bands();
  for (const auto& f : frames)
    if (!f.image || f.image->bands() != bands)
      throw DomainError("build_mosaic: frames must share the band count");

  MosaicResult out;
  const std::size_t n = frames.size();
  out.corrected.resize(n);
  out.corrections.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.corrected[i] = frames[i].snapshot;
    out.corrections[i].id = static_cast<int>(i);
    out.corrections[i].mode = mode_name(plan.entries[i]);
    out.corrections[i].reference = plan.entries[i].reference;
  }

  // References are corrected before their dependents: scan order for
  // neighbour/up, reverse chain order for opposite references.
  std::vector<char> state(n, 0);  // 0 new, 1 in progress, 2 done
  std::function<void(std::size_t)> process = [&](std::size_t i) {
    if (state[i] == 2) return;
    if (state[i] == 1) throw DomainError("build_mosaic: cyclic reference plan");
    state[i] = 1;
    const RefEntry& e = plan.entries[i];
    FrameCorrection& fc = out.corrections[i];
    if (!e.system_only()) {
      try {
        if (!e.reference || !e.match) throw DomainError("referenced frame without a match");
        const auto ref = static_cast<std::size_t>(*e.reference);
        if (ref >= n) throw DomainError("reference outside the frame list");
        process(ref);
        const geomodel::FrameGeometry rg(out.corrected[ref], consts);
        const Match& m = *e.match;
        resection::ResectionProblem pb;
        pb.snapshot = frames[i].snapshot;
        pb.consts = consts;
        pb.lcc = opt.lcc;
        pb.elevation = elev;
        for (int qr : {0, m.rows - 1})
          for (int qc : {0, m.cols - 1})
            pb.points.push_back(resection::Correspondence::relative(
                m.cur_row0 + qr + m.shift.d_line, m.cur_col0 + qc + m.shift.d_pixel, rg,
                m.ref_row0 + qr, m.ref_col0 + qc, elev));
        auto res = resection::resect(pb);
        if (res.final_rms_m <= res.initial_rms_m) out.corrected[i] = res.snapshot;
        if (!res.converged) fc.error = "resection did not converge";
        fc.resection = std::move(res);
      } catch (const Error& ex) {
        fc.error = ex.what();
      }
    }
    state[i] = 2;
  };
  for (std::size_t i = 0; i < n; ++i) process(i);

  // Shared grid over every corrected footprint.
  const projection::Lcc lcc(opt.lcc);
  std::vector<MapBox> boxes(n);
  MapBox all;
  for (std::size_t i = 0; i < n; ++i) {
    boxes[i] = projection::frame_footprint(geomodel::FrameGeometry(out.corrected[i], consts), lcc, elev);
    all = i == 0 ? boxes[i] : unite(all, boxes[i]);
  }
  out.grid = projection::grid_covering(all, opt.lcc, opt.gsd_m);
  const GridSpec& grid = out.grid;
  const std::size_t cells = static_cast<std::size_t>(grid.width) * grid.height;
  std::vector<float> acc(cells * static_cast<std::size_t>(bands), 0.0f);
  std::vector<float> wsum(cells, 0.0f);
  out.passes_per_frame.assign(n, 0);

  for (std::size_t i = 0; i < n; ++i) {
    const Raster& img = *frames[i].image;
    const geomodel::FrameGeometry geom(out.corrected[i], consts);
    const GridWindow win = window_for(boxes[i], grid);
    if (win.width == 0 || win.height == 0) continue;
    const projection::PixelMap map = projection::map_grid_to_pixels(
        geom, grid, win, elev, projection::lattice_step(consts, grid));
    const double hi_r = img.height() - 0.5, hi_c = img.width() - 0.5;
    std::vector<std::uint64_t> row_samples(static_cast<std::size_t>(win.height), 0);
    parallel_for(win.height, [&](int r) {
      for (int c = 0; c < win.width; ++c) {
        const std::size_t k = static_cast<std::size_t>(r) * win.width + c;
        const double pr = map.rows[k], pc = map.cols[k];
        if (!(pr >= -0.5 && pr <= hi_r && pc >= -0.5 && pc <= hi_c)) continue;
        const double edge = std::min({pr + 0.5, hi_r - pr, pc + 0.5, hi_c - pc});
        const float w = static_cast<float>(
            std::clamp(opt.feather_px > 0.0 ? edge / opt.feather_px : 1.0, 1e-4, 1.0));
        const std::size_t g = static_cast<std::size_t>(win.row0 + r) * grid.width + win.col0 + c;
        bool valid = true;
        float vals[16];
        const int nb = std::min(bands, 16);
        for (int b = 0; b < nb; ++b) {
          vals[b] = projection::sample_bicubic(img, b, pr, pc);
          if (!img.is_valid(vals[b])) valid = false;
        }
        row_samples[static_cast<std::size_t>(r)] += static_cast<std::uint64_t>(nb);
        if (!valid) continue;
        for (int b = 0; b < nb; ++b) acc[static_cast<std::size_t>(b) * cells + g] += w * vals[b];
        wsum[g] += w;
      }
    });
    for (auto s : row_samples) out.stats.samples += s;
    ++out.stats.passes;
    ++out.passes_per_frame[i];
  }

  out.mosaic = Raster(grid.width, grid.height, bands, projection::kDefaultNodata);
  out.mosaic.geotransform = grid.transform;
  out.mosaic.lcc = grid.lcc;
  for (int b = 0; b < bands; ++b) {
    auto dst = out.mosaic.band(b);
    for (std::size_t g = 0; g < cells; ++g)
      if (wsum[g] > 0.0f) dst[g] = acc[static_cast<std::size_t>(b) * cells + g] / wsum[g];
  }
  return out;
}

namespace {

// Shrinks the window until both images are valid everywhere in it.
bool trim_to_valid(const Raster& a, const Raster& b, GridWindow& w) {
  auto bad = [&](int r, int c) {
    return !a.is_valid(a.at(r, c)) || !b.is_valid(b.at(r, c));
  };
  while (w.height >= 32 && w.width >= 32) {
    int top = 0, bottom = 0, left = 0, right = 0;
    for (int c = w.col0; c < w.col0 + w.width; ++c) {
      top += bad(w.row0, c);
      bottom += bad(w.row0 + w.height - 1, c);
    }
    for (int r = w.row0; r < w.row0 + w.height; ++r) {
      left += bad(r, w.col0);
      right += bad(r, w.col0 + w.width - 1);
    }
    const double ft = static_cast<double>(top) / w.width, fb = static_cast<double>(bottom) / w.width;
    const double fl = static_cast<double>(left) / w.height, fr = static_cast<double>(right) / w.height;
    const double worst = std::max({ft, fb, fl, fr});
    if (worst == 0.0) return true;
    if (worst == ft) {
      ++w.row0;
      --w.height;
    } else if (worst == fb) {
      --w.height;
    } else if (worst == fl) {
      ++w.col0;
      --w.width;
    } else {
      --w.width;
    }
  }
  return false;
}

}  // namespace

SeamEdge measure_seam(const MosaicFrame& fa, const GeometrySnapshot& sa, const MosaicFrame& fb,
                      const GeometrySnapshot& sb, const CameraConstants& consts,
                      const projection::ElevationSource& elev, const MosaicOptions& opt) {
  const projection::Lcc lcc(opt.lcc);
  SeamEdge e;
  e.a = fa.pointing.id;
  e.b = fb.pointing.id;
  try {
    const geomodel::FrameGeometry ga(sa, consts), gb(sb, consts);
    const MapBox box = intersect(projection::frame_footprint(ga, lcc, elev),
                                 projection::frame_footprint(gb, lcc, elev));
    if (box.empty()) throw InsufficientOverlap("frames do not overlap");
    const GridSpec grid = projection::grid_covering(box, opt.lcc, opt.gsd_m);
    const GridWindow full{0, 0, grid.height, grid.width};
    const Raster ra =
        projection::georeference_frame(fa.image->extract_band(opt.band), ga, grid, full, elev);
    const Raster rb =
        projection::georeference_frame(fb.image->extract_band(opt.band), gb, grid, full, elev);
    GridWindow w = full;
    if (!trim_to_valid(ra, rb, w)) throw InsufficientOverlap("common valid overlap too small");
    const Image ca = Image::from_raster(ra, 0, w.row0, w.col0, w.height, w.width);
    const Image cb = Image::from_raster(rb, 0, w.row0, w.col0, w.height, w.width);
    registration::PhaseCorrelationOptions po = opt.phase;
    po.threshold = opt.threshold;
    const auto s = registration::phase_correlate(ca, cb, po);
    e.confidence = s.confidence;
    e.confident = s.confident;

    // Grid-cell displacement -> detector pixels of frame b.
    const double r = w.row0 + w.height / 2.0, c = w.col0 + w.width / 2.0;
    auto to_px = [&](double rr, double cc) {
      const auto m = grid.transform.cell_center(rr, cc);
      auto g = lcc.inverse(m.x, m.y);
      g.height_m = elev.height_at(g.lat_deg, g.lon_deg);
      const auto p = gb.project(g);
      if (!p) throw OutsideFrame("seam centre not visible");
      return *p;
    };
    const auto p0 = to_px(r, c), pr = to_px(r + 1.0, c), pc = to_px(r, c + 1.0);
    e.d_line_px = (pr.row - p0.row) * s.d_line + (pc.row - p0.row) * s.d_pixel;
    e.d_pixel_px = (pr.col - p0.col) * s.d_line + (pc.col - p0.col) * s.d_pixel;
    e.magnitude_px = std::hypot(e.d_line_px, e.d_pixel_px);
  } catch (const Error& ex) {
    e.error = ex.what();
  }
  return e;
}

SeamReport seam_metric(const std::vector<MosaicFrame>& frames,
                       const std::vector<GeometrySnapshot>& geometry, const CameraConstants& consts,
                       const projection::ElevationSource& elev, const MosaicOptions& opt) {
  if (geometry.size() != frames.size()) throw DomainError("seam_metric: geometry count mismatch");
  std::map<std::pair<int, int>, std::size_t> at;
  for (std::size_t i = 0; i < frames.size(); ++i)
    at[{frames[i].pointing.grid_row, frames[i].pointing.grid_col}] = i;

  std::vector<std::pair<std::size_t, std::pair<std::size_t, bool>>> pairs;
  for (const auto& [pos, i] : at) {
    const auto right = at.find({pos.first, pos.second + 1});
    if (right != at.end()) pairs.push_back({i, {right->second, false}});
    const auto below = at.find({pos.first + 1, pos.second});
    if (below != at.end()) pairs.push_back({i, {below->second, true}});
  }

  SeamReport rep;
  double ss = 0.0;
  for (const auto& [ia, jb] : pairs) {
    const auto [ib, vertical] = jb;
    SeamEdge e = measure_seam(frames[ia], geometry[ia], frames[ib], geometry[ib], consts, elev, opt);
    e.a = static_cast<int>(ia);
    e.b = static_cast<int>(ib);
    e.vertical = vertical;
    if (e.confident) {
      ++rep.confident_edges;
      ss += e.magnitude_px * e.magnitude_px;
      rep.max_px = std::max(rep.max_px, e.magnitude_px);
    }
    rep.edges.push_back(e);
  }
  if (rep.confident_edges > 0) rep.rms_px = std::sqrt(ss / rep.confident_edges);
  return rep;
}

}  // namespace ghrc::mosaic
