#include "ghrc/elevation.hpp"

#include <algorithm>
#include <cmath>

#include "ghrc/error.hpp"

namespace ghrc::projection {

namespace {
constexpr double kMinHeightM = -500.0;
constexpr double kMaxHeightM = 9000.0;

void check_height(double h) {
  if (!(h >= kMinHeightM && h <= kMaxHeightM))
    throw DomainError("elevation outside [-500, 9000] m: " + std::to_string(h));
}
}  // namespace

ElevationSource ElevationSource::constant(double height_m) {
  check_height(height_m);
  ElevationSource e;
  e.constant_m_ = height_m;
  return e;
}

ElevationSource ElevationSource::grid(double lat_north_deg, double lon_west_deg,
                                      double spacing_deg, int rows, int cols,
                                      std::vector<double> heights_m) {
  if (!(spacing_deg > 0.0)) throw DomainError("elevation grid spacing must be > 0");
  if (rows < 2 || cols < 2) throw DomainError("elevation grid needs at least 2x2 samples");
  if (heights_m.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols))
    throw DomainError("elevation grid size does not match rows*cols");
  for (double h : heights_m) check_height(h);
  ElevationSource e;
  e.lat_north_ = lat_north_deg;
  e.lon_west_ = lon_west_deg;
  e.spacing_ = spacing_deg;
  e.rows_ = rows;
  e.cols_ = cols;
  e.heights_ = std::move(heights_m);
  return e;
}

double ElevationSource::height_at(double lat_deg, double lon_deg) const {
  if (is_constant()) return constant_m_;
  const double fr = std::clamp((lat_north_ - lat_deg) / spacing_, 0.0, rows_ - 1.0);
  const double fc = std::clamp((lon_deg - lon_west_) / spacing_, 0.0, cols_ - 1.0);
  const int r0 = std::min(static_cast<int>(fr), rows_ - 2);
  const int c0 = std::min(static_cast<int>(fc), cols_ - 2);
  const double tr = fr - r0;
  const double tc = fc - c0;
  auto at = [&](int r, int c) { return heights_[static_cast<std::size_t>(r) * cols_ + c]; };
  const double top = at(r0, c0) * (1.0 - tc) + at(r0, c0 + 1) * tc;
  const double bot = at(r0 + 1, c0) * (1.0 - tc) + at(r0 + 1, c0 + 1) * tc;
  return top * (1.0 - tr) + bot * tr;
}

}  // namespace ghrc::projection
