#include "ghrc/georeference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ghrc/error.hpp"
#include "ghrc/parallel.hpp"

namespace ghrc::projection {

MapBox frame_footprint(const geomodel::FrameGeometry& geom, const Lcc& lcc,
                       const ElevationSource& elev, int samples_per_edge) {
  const double lo = -0.5;
  const double hi = geom.constants().detector_pixels - 0.5;
  MapBox box{std::numeric_limits<double>::max(), std::numeric_limits<double>::lowest(),
             std::numeric_limits<double>::max(), std::numeric_limits<double>::lowest()};
  auto add = [&](double r, double c) {
    const MapPoint p = lcc.forward(geom.geolocate(r, c, elev));
    box.xmin = std::min(box.xmin, p.x);
    box.xmax = std::max(box.xmax, p.x);
    box.ymin = std::min(box.ymin, p.y);
    box.ymax = std::max(box.ymax, p.y);
  };
  for (int i = 0; i <= samples_per_edge; ++i) {
    const double t = lo + (hi - lo) * i / samples_per_edge;
    add(lo, t);
    add(hi, t);
    add(t, lo);
    add(t, hi);
  }
  return box;
}

GridSpec grid_covering(const MapBox& box, const LccParams& lcc, double gsd_m) {
  if (!(gsd_m > 0.0)) throw DomainError("gsd must be > 0");
  if (box.empty()) throw DomainError("empty map box");
  const double x0 = std::floor(box.xmin / gsd_m) * gsd_m;
  const double x1 = std::ceil(box.xmax / gsd_m) * gsd_m;
  const double y0 = std::ceil(box.ymax / gsd_m) * gsd_m;
  const double y1 = std::floor(box.ymin / gsd_m) * gsd_m;
  GridSpec g;
  g.lcc = lcc;
  g.transform = GeoTransform{x0, y0, gsd_m, -gsd_m};
  g.width = static_cast<int>(std::lround((x1 - x0) / gsd_m));
  g.height = static_cast<int>(std::lround((y0 - y1) / gsd_m));
  return g;
}

int lattice_step(const geomodel::CameraConstants& consts, const GridSpec& grid) {
  const double cells = 32.0 * consts.nadir_gsd_m() / std::abs(grid.transform.dx);
  return std::clamp(static_cast<int>(cells), 1, 16);
}

PixelMap map_grid_to_pixels(const geomodel::FrameGeometry& geom, const GridSpec& grid,
                            const GridWindow& window, const ElevationSource& elev, int node_step) {
  const Lcc lcc(grid.lcc);
  const int nr = (std::max(window.height - 1, 0) + node_step - 1) / node_step + 1;
  const int nc = (std::max(window.width - 1, 0) + node_step - 1) / node_step + 1;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> node_r(static_cast<std::size_t>(nr) * nc, nan);
  std::vector<double> node_c(node_r.size(), nan);

  parallel_for(nr, [&](int i) {
    for (int j = 0; j < nc; ++j) {
      const MapPoint m = grid.transform.cell_center(window.row0 + i * node_step,
                                                    window.col0 + j * node_step);
      try {
        GeodeticPoint pt = lcc.inverse(m.x, m.y);
        pt.height_m = elev.height_at(pt.lat_deg, pt.lon_deg);
        if (const auto px = geom.project(pt)) {
          node_r[static_cast<std::size_t>(i) * nc + j] = px->row;
          node_c[static_cast<std::size_t>(i) * nc + j] = px->col;
        }
      } catch (const DomainError&) {
      }
    }
  });

  PixelMap map;
  map.window = window;
  const std::size_t n = static_cast<std::size_t>(window.width) * window.height;
  map.rows.assign(n, nan);
  map.cols.assign(n, nan);
  parallel_for(window.height, [&](int r) {
    const int i = std::min(r / node_step, nr - 2 < 0 ? 0 : nr - 2);
    const double tr = nr > 1 ? static_cast<double>(r - i * node_step) / node_step : 0.0;
    for (int c = 0; c < window.width; ++c) {
      const int j = std::min(c / node_step, nc - 2 < 0 ? 0 : nc - 2);
      const double tc = nc > 1 ? static_cast<double>(c - j * node_step) / node_step : 0.0;
      const int i1 = std::min(i + 1, nr - 1), j1 = std::min(j + 1, nc - 1);
      auto lerp2 = [&](const std::vector<double>& v) {
        const double a = v[static_cast<std::size_t>(i) * nc + j];
        const double b = v[static_cast<std::size_t>(i) * nc + j1];
        const double cc = v[static_cast<std::size_t>(i1) * nc + j];
        const double d = v[static_cast<std::size_t>(i1) * nc + j1];
        return (a * (1.0 - tc) + b * tc) * (1.0 - tr) + (cc * (1.0 - tc) + d * tc) * tr;
      };
      const std::size_t k = static_cast<std::size_t>(r) * window.width + c;
      map.rows[k] = lerp2(node_r);
      map.cols[k] = lerp2(node_c);
    }
  });
  return map;
}

Raster georeference_frame(const Raster& frame, const geomodel::FrameGeometry& geom,
                          const GridSpec& grid, const GridWindow& window,
                          const ElevationSource& elev, ResampleStats* stats) {
  const PixelMap map =
      map_grid_to_pixels(geom, grid, window, elev, lattice_step(geom.constants(), grid));
  Raster out(window.width, window.height, frame.bands(), frame.nodata);
  out.nodata = frame.nodata;
  out.geotransform = GeoTransform{grid.transform.x0 + window.col0 * grid.transform.dx,
                                  grid.transform.y0 + window.row0 * grid.transform.dy,
                                  grid.transform.dx, grid.transform.dy};
  out.lcc = grid.lcc;
  for (int b = 0; b < frame.bands(); ++b) {
    std::span<float> dst = out.band(b);
    parallel_for(window.height, [&](int r) {
      for (int c = 0; c < window.width; ++c) {
        const std::size_t k = static_cast<std::size_t>(r) * window.width + c;
        if (std::isnan(map.rows[k])) continue;
        dst[k] = sample_bicubic(frame, b, map.rows[k], map.cols[k]);
      }
    });
  }
  if (stats) {
    for (std::size_t k = 0; k < map.rows.size(); ++k)
      if (!std::isnan(map.rows[k])) stats->samples += static_cast<std::uint64_t>(frame.bands());
    ++stats->passes;
  }
  return out;
}

Raster georeference_frame(const Raster& frame, const geomodel::GeometrySnapshot& snap,
                          const geomodel::CameraConstants& consts, const LccParams& lcc,
                          double gsd_m, const ElevationSource& elev, ResampleStats* stats) {
  const geomodel::FrameGeometry geom(snap, consts);
  const GridSpec grid = grid_covering(frame_footprint(geom, Lcc(lcc), elev), lcc, gsd_m);
  return georeference_frame(frame, geom, grid, GridWindow{0, 0, grid.height, grid.width}, elev,
                            stats);
}

}  // namespace ghrc::projection
