#include "ghrc/resample.hpp"

#include <algorithm>

#include "ghrc/error.hpp"

namespace ghrc::projection {

double keys_kernel(double x, double a) {
  const double ax = std::abs(x);
  if (ax <= 1.0) return (a + 2.0) * ax * ax * ax - (a + 3.0) * ax * ax + 1.0;
  if (ax < 2.0) return a * ax * ax * ax - 5.0 * a * ax * ax + 8.0 * a * ax - 4.0 * a;
  return 0.0;
}

float sample_bicubic(const Raster& src, int band, double row, double col) {
  const int h = src.height(), w = src.width();
  if (!(row >= -0.5 && row <= h - 0.5 && col >= -0.5 && col <= w - 0.5)) return src.nodata;
  const double fr = std::floor(row), fc = std::floor(col);
  const auto wr = keys_weights(row - fr);
  const auto wc = keys_weights(col - fc);
  const int r0 = static_cast<int>(fr) - 1, c0 = static_cast<int>(fc) - 1;
  const std::span<const float> px = src.band(band);

  double acc = 0.0;
  if (r0 >= 0 && c0 >= 0 && r0 + 3 < h && c0 + 3 < w) {
    for (int i = 0; i < 4; ++i) {
      const float* line = px.data() + static_cast<std::size_t>(r0 + i) * w + c0;
      double s = 0.0;
      for (int j = 0; j < 4; ++j) {
        if (line[j] == src.nodata) return src.nodata;
        s += wc[j] * line[j];
      }
      acc += wr[i] * s;
    }
    return static_cast<float>(acc);
  }
  for (int i = 0; i < 4; ++i) {
    const int rr = std::clamp(r0 + i, 0, h - 1);
    double s = 0.0;
    for (int j = 0; j < 4; ++j) {
      const int cc = std::clamp(c0 + j, 0, w - 1);
      const float v = px[static_cast<std::size_t>(rr) * w + cc];
      if (v == src.nodata) return src.nodata;
      s += wc[j] * v;
    }
    acc += wr[i] * s;
  }
  return static_cast<float>(acc);
}

Raster resample_bicubic(const Raster& src, std::span<const double> sample_rows,
                        std::span<const double> sample_cols, int out_width, int out_height,
                        ResampleStats* stats) {
  const std::size_t n = static_cast<std::size_t>(out_width) * out_height;
  if (sample_rows.size() != n || sample_cols.size() != n)
    throw DomainError("resample_bicubic: coordinate grid size mismatch");
  Raster out(out_width, out_height, src.bands(), src.nodata);
  out.nodata = src.nodata;
  for (int b = 0; b < src.bands(); ++b) {
    std::span<float> dst = out.band(b);
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(sample_rows[i]) || !std::isfinite(sample_cols[i])) continue;
      dst[i] = sample_bicubic(src, b, sample_rows[i], sample_cols[i]);
      if (stats) ++stats->samples;
    }
  }
  if (stats) ++stats->passes;
  return out;
}

Raster shift_bicubic(const Raster& src, double d_line, double d_pixel, ResampleStats* stats) {
  Raster out(src.width(), src.height(), src.bands(), src.nodata);
  out.nodata = src.nodata;
  out.geotransform = src.geotransform;
  out.lcc = src.lcc;
  for (int b = 0; b < src.bands(); ++b)
    for (int r = 0; r < src.height(); ++r)
      for (int c = 0; c < src.width(); ++c)
        out.at(b, r, c) = sample_bicubic(src, b, r + d_line, c + d_pixel);
  if (stats) {
    stats->samples += static_cast<std::uint64_t>(src.width()) * src.height() * src.bands();
    ++stats->passes;
  }
  return out;
}

}  // namespace ghrc::projection
