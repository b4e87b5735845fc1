#include "ghrc/scene.hpp"

#include <cmath>
#include <random>

#include "ghrc/error.hpp"
#include "ghrc/resample.hpp"

namespace ghrc::sim {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Lattice value in [-1, 1].
inline double lattice(std::int64_t i, std::int64_t j, std::uint64_t key) {
  const std::uint64_t h = splitmix64(key ^ splitmix64(static_cast<std::uint64_t>(i) * 0x9e3779b1ull +
                                                      static_cast<std::uint64_t>(j)));
  return static_cast<double>(h >> 11) * (2.0 / 9007199254740992.0) - 1.0;
}

inline double quintic(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

double value_noise(double u, double v, std::uint64_t key) {
  const double fu = std::floor(u), fv = std::floor(v);
  const auto i = static_cast<std::int64_t>(fu);
  const auto j = static_cast<std::int64_t>(fv);
  const double su = quintic(u - fu), sv = quintic(v - fv);
  const double a = lattice(i, j, key), b = lattice(i + 1, j, key);
  const double c = lattice(i, j + 1, key), d = lattice(i + 1, j + 1, key);
  return (a + (b - a) * su) * (1.0 - sv) + (c + (d - c) * su) * sv;
}

}  // namespace

ProceduralScene::ProceduralScene(const projection::LccParams& lcc, const FractalParams& params)
    : Scene(lcc), params_(params) {
  if (params.octaves < 1) throw ConfigurationError("fractal texture needs at least one octave");
  if (!(params.base_wavelength_m > 0.0)) throw ConfigurationError("base_wavelength_m must be > 0");
  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * geodesy::kPi);
  std::uniform_real_distribution<double> shift(0.0, 1000.0);
  double amp = 1.0, norm = 0.0, wavelength = params.base_wavelength_m;
  for (int o = 0; o < params.octaves; ++o) {
    const double a = angle(rng);
    octaves_.push_back({std::cos(a), std::sin(a), 1.0 / wavelength, amp, shift(rng), shift(rng),
                        splitmix64(params.seed * 1315423911ull + static_cast<std::uint64_t>(o))});
    norm += amp;
    amp *= params.persistence;
    wavelength /= 2.0;
  }
  for (auto& o : octaves_) o.amp /= norm;
}

float ProceduralScene::sample(double x, double y) const {
  double v = 0.0;
  for (const Octave& o : octaves_) {
    const double u = (o.cos_a * x - o.sin_a * y) * o.inv_wavelength + o.offset_u;
    const double w = (o.sin_a * x + o.cos_a * y) * o.inv_wavelength + o.offset_v;
    v += o.amp * value_noise(u, w, o.key);
  }
  return static_cast<float>(params_.mean + params_.amplitude * v);
}

RasterScene::RasterScene(projection::Raster texture)
    : Scene(texture.lcc.value_or(projection::LccParams{})), texture_(std::move(texture)) {
  if (!texture_.geotransform) throw ConfigurationError("scene raster has no geotransform");
  if (!texture_.lcc) throw ConfigurationError("scene raster has no LCC parameters");
}

float RasterScene::sample(double x, double y) const {
  const auto& g = *texture_.geotransform;
  const double col = (x - g.x0) / g.dx - 0.5;
  const double row = (y - g.y0) / g.dy - 0.5;
  return projection::sample_bicubic(texture_, 0, row, col);
}

MaskedScene::MaskedScene(std::shared_ptr<const Scene> base, std::vector<Quad> masks, float value)
    : Scene(base->lcc().params()), base_(std::move(base)), masks_(std::move(masks)), value_(value) {
  for (const Quad& q : masks_) {
    MapRect r{q[0].x, q[0].x, q[0].y, q[0].y};
    for (const auto& p : q) {
      r.xmin = std::min(r.xmin, p.x);
      r.xmax = std::max(r.xmax, p.x);
      r.ymin = std::min(r.ymin, p.y);
      r.ymax = std::max(r.ymax, p.y);
    }
    bounds_.push_back(r);
  }
}

float MaskedScene::sample(double x, double y) const {
  for (std::size_t k = 0; k < masks_.size(); ++k) {
    if (!bounds_[k].contains(x, y)) continue;
    const Quad& q = masks_[k];
    // Convex test: same sign of every edge cross product.
    int pos = 0, neg = 0;
    for (int e = 0; e < 4; ++e) {
      const auto& a = q[e];
      const auto& b = q[(e + 1) % 4];
      const double cr = (b.x - a.x) * (y - a.y) - (b.y - a.y) * (x - a.x);
      if (cr > 0) ++pos;
      if (cr < 0) ++neg;
    }
    if (pos == 0 || neg == 0) return value_;
  }
  return base_->sample(x, y);
}

}  // namespace ghrc::sim
