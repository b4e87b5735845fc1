#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>

#include "ghrc/raster.hpp"

namespace ghrc::projection {

/// Keys cubic convolution coefficient.
inline constexpr double kKeysA = -0.5;

double keys_kernel(double x, double a = kKeysA);

/// The four tap weights for taps at offsets -1, 0, 1, 2 from floor(x), given the
/// fractional phase t = x - floor(x).
inline std::array<double, 4> keys_weights(double t) {
  constexpr double a = kKeysA;
  const double t2 = t * t, t3 = t2 * t;
  const double u = 1.0 - t, u2 = u * u, u3 = u2 * u;
  return {a * (t3 + 3 * t2 + 3 * t + 1) - 5 * a * (t2 + 2 * t + 1) + 8 * a * (t + 1) - 4 * a,
          (a + 2) * t3 - (a + 3) * t2 + 1, (a + 2) * u3 - (a + 3) * u2 + 1,
          a * (u3 + 3 * u2 + 3 * u + 1) - 5 * a * (u2 + 2 * u + 1) + 8 * a * (u + 1) - 4 * a};
}

/// Counts interpolations for the single-resampling checks.
struct ResampleStats {
  std::uint64_t samples = 0;
  std::uint64_t passes = 0;
};

/// Bicubic sample of one band at fractional (row, col). Coordinates outside
/// [-0.5, size-0.5] or touching a nodata tap yield the raster's nodata value;
/// taps past the border replicate the edge.
float sample_bicubic(const Raster& src, int band, double row, double col);

/// Resamples every band of `src` at the given coordinate grids (row-major,
/// out_width x out_height).
Raster resample_bicubic(const Raster& src, std::span<const double> sample_rows,
                        std::span<const double> sample_cols, int out_width, int out_height,
                        ResampleStats* stats = nullptr);

/// Translates every band by (d_line, d_pixel): out(r, c) = src(r + d_line, c + d_pixel).
Raster shift_bicubic(const Raster& src, double d_line, double d_pixel,
                     ResampleStats* stats = nullptr);

}  // namespace ghrc::projection
