#pragma once

// Translation estimation between image chips: normalized cross-correlation
// with subpixel peak fitting (band-to-band registration) and phase correlation
// with a peak-ratio confidence (frame-to-frame overlaps).
//
// Shift convention everywhere: an estimate d means moving(x + d) = ref(x), i.e.
// content of the reference chip appears displaced by +d in the moving chip.

#include <vector>

#include "ghrc/raster.hpp"
#include "ghrc/resample.hpp"

namespace ghrc::registration {

/// Row-major double image.
struct Image {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Image() = default;
  Image(int r, int c, double fill = 0.0)
      : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, fill) {}
  double& operator()(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }

  /// Window of one raster band; cells outside the raster or at nodata become NaN.
  static Image from_raster(const projection::Raster& r, int band, int row0, int col0, int height,
                           int width);
  bool has_nan() const;
};

/// Correlation values for integer shifts in [-radius, radius]^2.
struct Surface {
  int radius = 0;
  std::vector<double> v;

  int size() const { return 2 * radius + 1; }
  double at(int d_line, int d_pixel) const {
    return v[static_cast<std::size_t>(d_line + radius) * size() + (d_pixel + radius)];
  }
  double& at(int d_line, int d_pixel) {
    return v[static_cast<std::size_t>(d_line + radius) * size() + (d_pixel + radius)];
  }
};

/// NCC of the central (H - 2r) x (W - 2r) window of `ref` against every
/// integer displacement of it inside `moving`. Throws Homogeneous when either
/// chip has zero variance.
Surface ncc_surface(const Image& ref, const Image& moving, int radius);

enum class PeakModel { Quadratic, Gaussian };

struct SubpixelPeak {
  double d_line = 0.0;
  double d_pixel = 0.0;
  int int_line = 0;
  int int_pixel = 0;
  double value = 0.0;  // surface value at the integer peak
  bool fallback = false;  // fit had no interior maximum; integer peak returned
};

/// Least-squares biquadratic over the 3x3 neighbourhood of the integer maximum
/// and its analytic stationary point. The Gaussian model fits the logarithm of
/// the samples (exact for Gaussian peaks) and reverts to the quadratic model
/// when a sample is not positive. Throws PeakOnEdge for border maxima.
SubpixelPeak subpixel_peak(const Surface& s, PeakModel model = PeakModel::Quadratic);

inline constexpr double kConfidenceThreshold = 1.5;

struct ShiftEstimate {
  double d_line = 0.0;
  double d_pixel = 0.0;
  double confidence = 0.0;  // first peak / second peak
  bool confident = false;
  bool fallback = false;  // subpixel fit fell back to the integer peak
};

/// Ratio of the surface value at the integer peak to the largest competing
/// value outside a 5x5 exclusion window around it. With `local_maxima_only`
/// only 3x3 local maxima count as competitors.
double peak_ratio(const Surface& s, int int_line, int int_pixel, bool local_maxima_only);

/// NCC shift with subpixel refinement and confidence.
ShiftEstimate ncc_shift(const Image& ref, const Image& moving, int radius,
                        double threshold = kConfidenceThreshold);

struct PhaseCorrelationOptions {
  double tukey_alpha = 0.5;
  /// Std. dev. (pixels) of the Gaussian spread applied to the correlation peak.
  double peak_sigma_px = 1.5;
  double threshold = kConfidenceThreshold;
  /// Re-correlations against the moving chip resampled onto the estimate.
  int refinements = 3;
};

/// Phase correlation of equal-size chips (both sides >= 32). Confidence comes
/// from the first pass. Throws Homogeneous.
ShiftEstimate phase_correlate(const Image& ref, const Image& moving,
                              const PhaseCorrelationOptions& opt = {});

struct BbrOptions {
  int reference_band = 2;
  int chips_per_axis = 5;
  int chip_size = 256;
  int search_radius = 64;
  double threshold = kConfidenceThreshold;
};

struct BandRegistration {
  int band = 0;
  ShiftEstimate estimate;  // combined over chips
  int chips_total = 0;
  int chips_confident = 0;
  bool uncorrectable = false;  // no confident chip: passed through unchanged
  bool is_reference = false;
};

struct BbrResult {
  projection::Raster corrected;
  std::vector<BandRegistration> bands;
  projection::ResampleStats stats;
  bool all_correctable() const;
};

/// Estimates each band's shift against the reference band on a grid of chips,
/// combines confident chips by confidence-weighted median and resamples the
/// band by that shift.
BbrResult bbr_estimate_and_correct(const projection::Raster& frame, const BbrOptions& opt = {});

/// Confidence-weighted median (lower weighted median).
double weighted_median(std::vector<double> values, std::vector<double> weights);

}  // namespace ghrc::registration
