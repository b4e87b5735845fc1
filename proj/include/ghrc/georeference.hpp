#pragma once

#include <vector>

#include "ghrc/elevation.hpp"
#include "ghrc/geomodel.hpp"
#include "ghrc/lcc.hpp"
#include "ghrc/raster.hpp"
#include "ghrc/resample.hpp"

namespace ghrc::projection {

/// Output grid on an LCC plane.
struct GridSpec {
  LccParams lcc;
  GeoTransform transform;
  int width = 0;
  int height = 0;
};

struct MapBox {
  double xmin = 0.0, xmax = 0.0, ymin = 0.0, ymax = 0.0;
  bool empty() const { return !(xmax > xmin && ymax > ymin); }
};

/// Window of a grid, in cells.
struct GridWindow {
  int row0 = 0;
  int col0 = 0;
  int height = 0;
  int width = 0;
};

/// Bounding box (LCC metres) of the detector outline on the ground.
MapBox frame_footprint(const geomodel::FrameGeometry& geom, const Lcc& lcc,
                       const ElevationSource& elev = {}, int samples_per_edge = 16);

/// Grid with `gsd_m` cells covering the box, with cell edges snapped to integer
/// multiples of the gsd so separately built grids share cell centres.
GridSpec grid_covering(const MapBox& box, const LccParams& lcc, double gsd_m);

/// Source detector coordinates of every cell in `window`. Cells whose ground
/// point is not visible get NaN. The exact model is evaluated on a lattice of
/// nodes every `node_step` cells and interpolated bilinearly in between.
struct PixelMap {
  GridWindow window;
  std::vector<double> rows;
  std::vector<double> cols;
};
PixelMap map_grid_to_pixels(const geomodel::FrameGeometry& geom, const GridSpec& grid,
                            const GridWindow& window, const ElevationSource& elev = {},
                            int node_step = 16);

/// Lattice spacing (cells) keeping the nodes about 32 detector pixels apart,
/// capped at 16 cells.
int lattice_step(const geomodel::CameraConstants& consts, const GridSpec& grid);

/// Single-pass georeferencing of all bands of `frame` onto `window` of `grid`.
Raster georeference_frame(const Raster& frame, const geomodel::FrameGeometry& geom,
                          const GridSpec& grid, const GridWindow& window,
                          const ElevationSource& elev = {}, ResampleStats* stats = nullptr);

/// Footprint-aligned convenience: builds the grid from the frame footprint.
/// Throws MissesEarth if the footprint is off the Earth disk.
Raster georeference_frame(const Raster& frame, const geomodel::GeometrySnapshot& snap,
                          const geomodel::CameraConstants& consts, const LccParams& lcc,
                          double gsd_m, const ElevationSource& elev = {},
                          ResampleStats* stats = nullptr);

}  // namespace ghrc::projection
