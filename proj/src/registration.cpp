#include "ghrc/registration.hpp"

#include <fftw3.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <mutex>
#include <numeric>

#include "ghrc/error.hpp"
#include "ghrc/parallel.hpp"

namespace ghrc::registration {

namespace {

// FFTW planning is not thread-safe; execution is.
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
using RealBuf = std::unique_ptr<double[], FftwFree>;
using CplxBuf = std::unique_ptr<fftw_complex[], FftwFree>;

// Forward/inverse real 2-D transforms of a fixed size.
class Fft2 {
 public:
  Fft2(int rows, int cols)
      : rows_(rows), cols_(cols), half_(cols / 2 + 1),
        real_(static_cast<double*>(fftw_malloc(sizeof(double) * rows * cols))),
        spec_(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * rows * half_))) {
    std::lock_guard<std::mutex> lock(plan_mutex());
    fwd_ = fftw_plan_dft_r2c_2d(rows, cols, real_.get(), spec_.get(), FFTW_ESTIMATE);
    inv_ = fftw_plan_dft_c2r_2d(rows, cols, spec_.get(), real_.get(), FFTW_ESTIMATE);
  }
  ~Fft2() {
    std::lock_guard<std::mutex> lock(plan_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(inv_);
  }
  Fft2(const Fft2&) = delete;
  Fft2& operator=(const Fft2&) = delete;

  std::vector<std::complex<double>> forward(const std::vector<double>& in) {
    std::copy(in.begin(), in.end(), real_.get());
    fftw_execute(fwd_);
    std::vector<std::complex<double>> out(static_cast<std::size_t>(rows_) * half_);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = {spec_[i][0], spec_[i][1]};
    return out;
  }

  // Unnormalized inverse.
  std::vector<double> inverse(const std::vector<std::complex<double>>& in) {
    for (std::size_t i = 0; i < in.size(); ++i) {
      spec_[i][0] = in[i].real();
      spec_[i][1] = in[i].imag();
    }
    fftw_execute(inv_);
    return {real_.get(), real_.get() + static_cast<std::size_t>(rows_) * cols_};
  }

  int half() const { return half_; }

 private:
  int rows_, cols_, half_;
  RealBuf real_;
  CplxBuf spec_;
  fftw_plan fwd_ = nullptr;
  fftw_plan inv_ = nullptr;
};

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

void require_finite(const Image& im, const char* what) {
  if (im.has_nan()) throw DomainError(std::string(what) + " contains invalid samples");
}

constexpr double kMaxRatio = 1e6;

}  // namespace

Image Image::from_raster(const projection::Raster& r, int band, int row0, int col0, int height,
                         int width) {
  Image im(height, width, std::numeric_limits<double>::quiet_NaN());
  for (int i = 0; i < height; ++i) {
    const int rr = row0 + i;
    if (rr < 0 || rr >= r.height()) continue;
    for (int j = 0; j < width; ++j) {
      const int cc = col0 + j;
      if (cc < 0 || cc >= r.width()) continue;
      const float v = r.at(band, rr, cc);
      if (r.is_valid(v)) im(i, j) = v;
    }
  }
  return im;
}

bool Image::has_nan() const {
  return std::any_of(v.begin(), v.end(), [](double x) { return std::isnan(x); });
}

Surface ncc_surface(const Image& ref, const Image& moving, int radius) {
  if (ref.rows != moving.rows || ref.cols != moving.cols)
    throw DomainError("ncc_surface: chips differ in size");
  if (radius < 1 || ref.rows <= 2 * radius + 1 || ref.cols <= 2 * radius + 1)
    throw DomainError("ncc_surface: chip too small for the search radius");
  require_finite(ref, "reference chip");
  require_finite(moving, "moving chip");

  const int h = ref.rows, w = ref.cols;
  const int th = h - 2 * radius, tw = w - 2 * radius;
  const double n = static_cast<double>(th) * tw;

  // Zero-mean template, zero-padded to the chip size at its own location.
  double tmean = 0.0;
  for (int r = 0; r < th; ++r)
    for (int c = 0; c < tw; ++c) tmean += ref(r + radius, c + radius);
  tmean /= n;
  std::vector<double> tpad(static_cast<std::size_t>(h) * w, 0.0);
  double tss = 0.0;
  for (int r = 0; r < th; ++r)
    for (int c = 0; c < tw; ++c) {
      const double t = ref(r + radius, c + radius) - tmean;
      tpad[static_cast<std::size_t>(r + radius) * w + c + radius] = t;
      tss += t * t;
    }
  const double mmean = mean_of(moving.v);
  std::vector<double> m(moving.v.size());
  double mss = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    m[i] = moving.v[i] - mmean;
    mss += m[i] * m[i];
  }
  const double scale = std::max(1.0, std::abs(tmean));
  if (tss <= 1e-20 * n * scale * scale) throw Homogeneous("reference chip has zero variance");
  if (mss <= 1e-20 * static_cast<double>(m.size()) * std::max(1.0, mmean * mmean))
    throw Homogeneous("moving chip has zero variance");

  // Numerator: circular cross-correlation; no wrap for |d| <= radius.
  std::vector<double> corr;
  {
    Fft2 fft(h, w);
    auto ft = fft.forward(tpad);
    const auto fm = fft.forward(m);
    for (std::size_t i = 0; i < ft.size(); ++i) ft[i] = std::conj(ft[i]) * fm[i];
    corr = fft.inverse(ft);
  }
  const double inv_hw = 1.0 / (static_cast<double>(h) * w);

  // Integral images of the moving chip for the local window statistics.
  const int iw = w + 1;
  std::vector<double> s1(static_cast<std::size_t>(h + 1) * iw, 0.0), s2(s1.size(), 0.0);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const double v = m[static_cast<std::size_t>(r) * w + c];
      const std::size_t k = static_cast<std::size_t>(r + 1) * iw + c + 1;
      s1[k] = v + s1[k - 1] + s1[k - iw] - s1[k - iw - 1];
      s2[k] = v * v + s2[k - 1] + s2[k - iw] - s2[k - iw - 1];
    }
  auto box = [&](const std::vector<double>& s, int r0, int c0) {
    const std::size_t a = static_cast<std::size_t>(r0) * iw + c0;
    const std::size_t b = static_cast<std::size_t>(r0 + th) * iw + c0;
    return s[b + tw] - s[b] - s[a + tw] + s[a];
  };

  Surface out;
  out.radius = radius;
  out.v.assign(static_cast<std::size_t>(out.size()) * out.size(), 0.0);
  for (int dl = -radius; dl <= radius; ++dl)
    for (int dp = -radius; dp <= radius; ++dp) {
      const int r0 = radius + dl, c0 = radius + dp;
      const double sum = box(s1, r0, c0);
      const double var = box(s2, r0, c0) - sum * sum / n;
      const int cr = (dl + h) % h, cc = (dp + w) % w;
      const double num = corr[static_cast<std::size_t>(cr) * w + cc] * inv_hw;
      double v = 0.0;
      if (var > 1e-12 * mss / static_cast<double>(m.size()) * n) v = num / std::sqrt(tss * var);
      out.at(dl, dp) = std::clamp(v, -1.0, 1.0);
    }
  return out;
}

SubpixelPeak subpixel_peak(const Surface& s, PeakModel model) {
  if (s.radius < 1) throw DomainError("subpixel_peak: surface too small");
  int bl = 0, bp = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (int dl = -s.radius; dl <= s.radius; ++dl)
    for (int dp = -s.radius; dp <= s.radius; ++dp) {
      const double v = s.at(dl, dp);
      if (v > best) {
        best = v;
        bl = dl;
        bp = dp;
      }
    }
  if (!std::isfinite(best)) throw DomainError("subpixel_peak: no finite surface value");
  if (std::abs(bl) == s.radius || std::abs(bp) == s.radius)
    throw PeakOnEdge("correlation peak on the surface border");

  SubpixelPeak out;
  out.int_line = bl;
  out.int_pixel = bp;
  out.d_line = bl;
  out.d_pixel = bp;
  out.value = best;

  // z = a + b*x + c*y + d*x^2 + e*y^2 + f*x*y, x along pixels, y along lines.
  static const Eigen::Matrix<double, 6, 9> pinv = [] {
    Eigen::Matrix<double, 9, 6> a;
    for (int i = -1; i <= 1; ++i)
      for (int j = -1; j <= 1; ++j)
        a.row((i + 1) * 3 + (j + 1)) << 1.0, j, i, j * j, i * i, i * j;
    return Eigen::Matrix<double, 6, 9>((a.transpose() * a).inverse() * a.transpose());
  }();

  // On ridge-shaped peaks the sample maximum can sit one node away from the
  // cell holding the true maximum; the fit then lands outside +-0.5 and the
  // neighbourhood is moved onto the node nearest to it.
  for (int attempt = 0; attempt < 3; ++attempt) {
    Eigen::Matrix<double, 9, 1> z;
    bool use_log = model == PeakModel::Gaussian;
    for (int i = -1; i <= 1; ++i)
      for (int j = -1; j <= 1; ++j)
        if (!(s.at(bl + i, bp + j) > 0.0)) use_log = false;
    for (int i = -1; i <= 1; ++i)
      for (int j = -1; j <= 1; ++j) {
        const double v = s.at(bl + i, bp + j);
        z((i + 1) * 3 + (j + 1)) = use_log ? std::log(v) : v;
      }
    const Eigen::Matrix<double, 6, 1> p = pinv * z;
    Eigen::Matrix2d hess;
    hess << 2.0 * p(3), p(5), p(5), 2.0 * p(4);
    if (!(hess(0, 0) < 0.0 && hess.determinant() > 0.0)) {
      out.fallback = true;
      return out;
    }
    const Eigen::Vector2d xy = hess.inverse() * Eigen::Vector2d(-p(1), -p(2));
    const int mp = std::abs(xy(0)) > 0.5 ? (xy(0) > 0 ? 1 : -1) : 0;
    const int ml = std::abs(xy(1)) > 0.5 ? (xy(1) > 0 ? 1 : -1) : 0;
    const bool can_move = std::abs(bl + ml) < s.radius && std::abs(bp + mp) < s.radius &&
                          std::abs(xy(0)) < 1.5 && std::abs(xy(1)) < 1.5;
    if ((mp == 0 && ml == 0) || !can_move || attempt == 2) {
      out.int_line = bl;
      out.int_pixel = bp;
      out.value = s.at(bl, bp);
      out.d_pixel = bp + std::clamp(xy(0), -0.5, 0.5);
      out.d_line = bl + std::clamp(xy(1), -0.5, 0.5);
      return out;
    }
    bl += ml;
    bp += mp;
  }
  return out;
}

double peak_ratio(const Surface& s, int int_line, int int_pixel, bool local_maxima_only) {
  const double p1 = s.at(int_line, int_pixel);
  double p2 = -std::numeric_limits<double>::infinity();
  const int r = s.radius;
  for (int dl = -r; dl <= r; ++dl)
    for (int dp = -r; dp <= r; ++dp) {
      if (std::abs(dl - int_line) <= 2 && std::abs(dp - int_pixel) <= 2) continue;
      const double v = s.at(dl, dp);
      if (!(v > p2)) continue;
      if (local_maxima_only) {
        bool is_max = true;
        for (int i = -1; i <= 1 && is_max; ++i)
          for (int j = -1; j <= 1; ++j) {
            const int l = dl + i, p = dp + j;
            if ((i == 0 && j == 0) || std::abs(l) > r || std::abs(p) > r) continue;
            if (s.at(l, p) > v) {
              is_max = false;
              break;
            }
          }
        if (!is_max) continue;
      }
      p2 = v;
    }
  if (!(p1 > 0.0)) return 0.0;
  if (!(p2 > 0.0)) return kMaxRatio;
  return std::min(p1 / p2, kMaxRatio);
}

ShiftEstimate ncc_shift(const Image& ref, const Image& moving, int radius, double threshold) {
  const Surface s = ncc_surface(ref, moving, radius);
  const SubpixelPeak pk = subpixel_peak(s, PeakModel::Quadratic);
  ShiftEstimate e;
  e.d_line = pk.d_line;
  e.d_pixel = pk.d_pixel;
  e.fallback = pk.fallback;
  e.confidence = peak_ratio(s, pk.int_line, pk.int_pixel, true);
  e.confident = e.confidence >= threshold;
  return e;
}

namespace {

std::vector<double> tukey(int n, double alpha) {
  std::vector<double> w(n, 1.0);
  if (alpha <= 0.0 || n < 2) return w;
  const double edge = alpha * (n - 1) / 2.0;
  for (int i = 0; i < n; ++i) {
    const double k = std::min<double>(i, n - 1 - i);
    if (k < edge) w[i] = 0.5 * (1.0 - std::cos(geodesy::kPi * k / edge));
  }
  return w;
}

ShiftEstimate phase_correlate_once(const Image& ref, const Image& moving,
                                   const PhaseCorrelationOptions& opt) {
  if (ref.rows != moving.rows || ref.cols != moving.cols)
    throw DomainError("phase_correlate: chips differ in size");
  if (ref.rows < 32 || ref.cols < 32) throw DomainError("phase_correlate: chips must be >= 32");
  require_finite(ref, "reference chip");
  require_finite(moving, "moving chip");
  const int h = ref.rows, w = ref.cols;

  const auto wr = tukey(h, opt.tukey_alpha), wc = tukey(w, opt.tukey_alpha);
  auto prepare = [&](const Image& im, const char* what) {
    const double mean = mean_of(im.v);
    std::vector<double> out(im.v.size());
    double ss = 0.0;
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) {
        const double d = im(r, c) - mean;
        ss += d * d;
        out[static_cast<std::size_t>(r) * w + c] = d * wr[r] * wc[c];
      }
    if (ss <= 1e-20 * static_cast<double>(im.v.size()) * std::max(1.0, mean * mean))
      throw Homogeneous(std::string(what) + " has zero variance");
    return out;
  };
  const auto a = prepare(ref, "reference chip");
  const auto b = prepare(moving, "moving chip");

  std::vector<double> corr;
  {
    Fft2 fft(h, w);
    auto fa = fft.forward(a);
    const auto fb = fft.forward(b);
    double peak_mag = 0.0;
    for (std::size_t i = 0; i < fa.size(); ++i) {
      fa[i] = std::conj(fa[i]) * fb[i];
      peak_mag = std::max(peak_mag, std::abs(fa[i]));
    }
    const double k = 2.0 * geodesy::kPi * geodesy::kPi * opt.peak_sigma_px * opt.peak_sigma_px;
    const int half = fft.half();
    for (int r = 0; r < h; ++r) {
      const double fy = static_cast<double>(r <= h / 2 ? r : r - h) / h;
      for (int c = 0; c < half; ++c) {
        const double fx = static_cast<double>(c) / w;
        auto& z = fa[static_cast<std::size_t>(r) * half + c];
        const double mag = std::abs(z);
        z = mag > 1e-12 * peak_mag ? z / mag * std::exp(-k * (fx * fx + fy * fy)) : 0.0;
      }
    }
    corr = fft.inverse(fa);
  }

  // Whole circular surface, centred, for the confidence ratio.
  Surface full;
  full.radius = (std::min(h, w) - 1) / 2;
  full.v.resize(static_cast<std::size_t>(full.size()) * full.size());
  auto circ = [&](int dl, int dp) {
    return corr[static_cast<std::size_t>((dl % h + h) % h) * w + (dp % w + w) % w];
  };
  int bl = 0, bp = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (int dl = -full.radius; dl <= full.radius; ++dl)
    for (int dp = -full.radius; dp <= full.radius; ++dp) {
      const double v = circ(dl, dp);
      full.at(dl, dp) = v;
      if (v > best) {
        best = v;
        bl = dl;
        bp = dp;
      }
    }

  // Subpixel fit on a small patch around the (wrapped) integer peak.
  Surface patch;
  patch.radius = 2;
  patch.v.resize(25);
  for (int i = -2; i <= 2; ++i)
    for (int j = -2; j <= 2; ++j) patch.at(i, j) = circ(bl + i, bp + j);
  const SubpixelPeak pk = subpixel_peak(patch, PeakModel::Gaussian);

  ShiftEstimate e;
  e.d_line = bl + pk.d_line;
  e.d_pixel = bp + pk.d_pixel;
  e.fallback = pk.fallback;
  e.confidence = peak_ratio(full, bl, bp, false);
  e.confident = e.confidence >= opt.threshold;
  return e;
}

// moving(r + dl, c + dp), bicubic with edge replication.
Image shifted(const Image& im, double dl, double dp) {
  Image out(im.rows, im.cols);
  const double fl = std::floor(dl), fp = std::floor(dp);
  const auto wl = projection::keys_weights(dl - fl), wp = projection::keys_weights(dp - fp);
  auto clamp_r = [&](int r) { return std::clamp(r, 0, im.rows - 1); };
  auto clamp_c = [&](int c) { return std::clamp(c, 0, im.cols - 1); };
  for (int r = 0; r < im.rows; ++r)
    for (int c = 0; c < im.cols; ++c) {
      const int r0 = r + static_cast<int>(fl) - 1, c0 = c + static_cast<int>(fp) - 1;
      double v = 0.0;
      for (int a = 0; a < 4; ++a) {
        double row = 0.0;
        for (int b = 0; b < 4; ++b) row += wp[b] * im(clamp_r(r0 + a), clamp_c(c0 + b));
        v += wl[a] * row;
      }
      out(r, c) = v;
    }
  return out;
}

}  // namespace

ShiftEstimate phase_correlate(const Image& ref, const Image& moving,
                              const PhaseCorrelationOptions& opt) {
  ShiftEstimate e = phase_correlate_once(ref, moving, opt);
  // The window is common to both chips and pulls the peak towards zero;
  // re-correlating against the moving chip resampled onto the estimate
  // removes that bias.
  for (int it = 0; it < opt.refinements; ++it) {
    const ShiftEstimate r = phase_correlate_once(ref, shifted(moving, e.d_line, e.d_pixel), opt);
    e.d_line += r.d_line;
    e.d_pixel += r.d_pixel;
    if (std::hypot(r.d_line, r.d_pixel) < 1e-3) break;
  }
  return e;
}

double weighted_median(std::vector<double> values, std::vector<double> weights) {
  if (values.empty() || values.size() != weights.size())
    throw DomainError("weighted_median: empty or mismatched input");
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) {
    return values[i] < values[j] || (values[i] == values[j] && i < j);
  });
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double acc = 0.0;
  for (std::size_t i : idx) {
    acc += weights[i];
    if (acc >= 0.5 * total) return values[i];
  }
  return values[idx.back()];
}

bool BbrResult::all_correctable() const {
  return std::none_of(bands.begin(), bands.end(),
                      [](const BandRegistration& b) { return b.uncorrectable; });
}

BbrResult bbr_estimate_and_correct(const projection::Raster& frame, const BbrOptions& opt) {
  if (opt.reference_band < 0 || opt.reference_band >= frame.bands())
    throw ConfigurationError("reference band outside the frame");
  if (opt.chips_per_axis < 1 || opt.chip_size < 16 || opt.search_radius < 1)
    throw ConfigurationError("invalid BBR chip layout");
  const int win = opt.chip_size + 2 * opt.search_radius;
  if (win > frame.width() || win > frame.height())
    throw DomainError("frame smaller than one BBR search window");

  auto centres = [&](int extent) {
    std::vector<int> c(opt.chips_per_axis);
    const int lo = win / 2, hi = extent - win / 2;
    for (int k = 0; k < opt.chips_per_axis; ++k)
      c[k] = opt.chips_per_axis == 1 ? extent / 2 : lo + (hi - lo) * k / (opt.chips_per_axis - 1);
    return c;
  };
  const auto rows = centres(frame.height());
  const auto cols = centres(frame.width());
  const int nchips = opt.chips_per_axis * opt.chips_per_axis;

  std::vector<Image> ref_chips(nchips);
  for (int k = 0; k < nchips; ++k)
    ref_chips[k] = Image::from_raster(frame, opt.reference_band, rows[k / opt.chips_per_axis] - win / 2,
                                      cols[k % opt.chips_per_axis] - win / 2, win, win);

  BbrResult out;
  out.corrected = frame;
  for (int b = 0; b < frame.bands(); ++b) {
    BandRegistration reg;
    reg.band = b;
    reg.chips_total = nchips;
    if (b == opt.reference_band) {
      reg.is_reference = true;
      reg.chips_confident = nchips;
      reg.estimate.confident = true;
      out.bands.push_back(reg);
      continue;
    }
    std::vector<ShiftEstimate> est(nchips);
    std::vector<char> ok(nchips, 0);
    parallel_for(nchips, [&](int k) {
      const Image mov = Image::from_raster(frame, b, rows[k / opt.chips_per_axis] - win / 2,
                                           cols[k % opt.chips_per_axis] - win / 2, win, win);
      if (ref_chips[k].has_nan() || mov.has_nan()) return;
      try {
        est[k] = ncc_shift(ref_chips[k], mov, opt.search_radius, opt.threshold);
        ok[k] = est[k].confident ? 1 : 0;
      } catch (const Homogeneous&) {
      } catch (const PeakOnEdge&) {
      }
    });
    std::vector<double> dl, dp, wt;
    for (int k = 0; k < nchips; ++k)
      if (ok[k]) {
        dl.push_back(est[k].d_line);
        dp.push_back(est[k].d_pixel);
        wt.push_back(est[k].confidence);
      }
    reg.chips_confident = static_cast<int>(wt.size());
    if (wt.empty()) {
      reg.uncorrectable = true;
      out.bands.push_back(reg);
      continue;
    }
    reg.estimate.d_line = weighted_median(dl, wt);
    reg.estimate.d_pixel = weighted_median(dp, wt);
    reg.estimate.confidence = std::accumulate(wt.begin(), wt.end(), 0.0) / wt.size();
    reg.estimate.confident = true;

    const projection::Raster shifted = projection::shift_bicubic(
        frame.extract_band(b), reg.estimate.d_line, reg.estimate.d_pixel, &out.stats);
    std::copy(shifted.band(0).begin(), shifted.band(0).end(), out.corrected.band(b).begin());
    out.bands.push_back(reg);
  }
  return out;
}

}  // namespace ghrc::registration
