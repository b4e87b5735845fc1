#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "ghrc/lcc.hpp"

namespace ghrc::projection {

/// Upper-left corner of the upper-left cell and cell size in LCC metres.
/// North-up: dx > 0, dy < 0.
struct GeoTransform {
  double x0 = 0.0;
  double y0 = 0.0;
  double dx = 1.0;
  double dy = -1.0;

  /// Centre of cell (row, col).
  MapPoint cell_center(double row, double col) const {
    return {x0 + (col + 0.5) * dx, y0 + (row + 0.5) * dy};
  }
};

inline constexpr float kDefaultNodata = -9999.0f;

/// Band-sequential float raster, optionally georeferenced on an LCC grid.
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, int bands = 1, float fill = 0.0f);

  int width() const { return width_; }
  int height() const { return height_; }
  int bands() const { return bands_; }
  bool empty() const { return data_.empty(); }

  float& at(int band, int row, int col) { return data_[index(band, row, col)]; }
  float at(int band, int row, int col) const { return data_[index(band, row, col)]; }
  float& at(int row, int col) { return at(0, row, col); }
  float at(int row, int col) const { return at(0, row, col); }

  std::span<float> band(int b) {
    return {data_.data() + static_cast<std::size_t>(b) * plane(), plane()};
  }
  std::span<const float> band(int b) const {
    return {data_.data() + static_cast<std::size_t>(b) * plane(), plane()};
  }
  std::vector<float>& data() { return data_; }
  const std::vector<float>& data() const { return data_; }

  /// Single band copy.
  Raster extract_band(int b) const;

  float nodata = kDefaultNodata;
  std::optional<GeoTransform> geotransform;
  std::optional<LccParams> lcc;

  bool is_valid(float v) const { return v != nodata; }

 private:
  std::size_t plane() const { return static_cast<std::size_t>(width_) * height_; }
  std::size_t index(int b, int r, int c) const {
    return static_cast<std::size_t>(b) * plane() + static_cast<std::size_t>(r) * width_ + c;
  }

  int width_ = 0;
  int height_ = 0;
  int bands_ = 0;
  std::vector<float> data_;
};

/// Raw little-endian float32 band-sequential file `<base>.raw` plus JSON
/// sidecar `<base>.json`.
void write_raster(const Raster& r, const std::filesystem::path& base);
Raster read_raster(const std::filesystem::path& base);

/// 8-bit grayscale PNG of one band with a linear stretch between the
/// `clip_percent` and `100 - clip_percent` percentiles of the valid samples.
void write_quicklook_png(const Raster& r, int band, const std::filesystem::path& path,
                         double clip_percent = 2.0);

}  // namespace ghrc::projection
