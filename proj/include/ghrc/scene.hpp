#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "ghrc/lcc.hpp"
#include "ghrc/raster.hpp"

namespace ghrc::sim {

/// Ground reflectance texture on an LCC plane.
class Scene {
 public:
  explicit Scene(const projection::LccParams& lcc) : lcc_(lcc) {}
  virtual ~Scene() = default;

  const projection::Lcc& lcc() const { return lcc_; }

  /// Texture value at LCC (x, y) metres.
  virtual float sample(double x, double y) const = 0;

 private:
  projection::Lcc lcc_;
};

/// Seeded fractal value noise: `octaves` layers, the coarsest with lattice
/// spacing `base_wavelength_m`, each next one half as wide and `persistence`
/// times as strong. Each octave lattice is rotated by a seeded angle.
struct FractalParams {
  std::uint64_t seed = 1;
  int octaves = 6;
  double base_wavelength_m = 16000.0;
  double persistence = 0.6;
  double mean = 100.0;
  double amplitude = 40.0;
};

class ProceduralScene : public Scene {
 public:
  ProceduralScene(const projection::LccParams& lcc, const FractalParams& params);
  float sample(double x, double y) const override;
  const FractalParams& params() const { return params_; }

 private:
  struct Octave {
    double cos_a, sin_a, inv_wavelength, amp, offset_u, offset_v;
    std::uint64_t key;
  };
  FractalParams params_;
  std::vector<Octave> octaves_;
};

/// Georeferenced raster texture sampled bicubically; nodata outside.
class RasterScene : public Scene {
 public:
  explicit RasterScene(projection::Raster texture);
  float sample(double x, double y) const override;

 private:
  projection::Raster texture_;
};

/// Axis-aligned box on the LCC plane.
struct MapRect {
  double xmin, xmax, ymin, ymax;
  bool contains(double x, double y) const { return x >= xmin && x <= xmax && y >= ymin && y <= ymax; }
};

/// Wraps a scene and replaces the texture with a constant inside convex
/// quadrilaterals (cloud-like masks that defeat correlation).
class MaskedScene : public Scene {
 public:
  using Quad = std::array<projection::MapPoint, 4>;
  MaskedScene(std::shared_ptr<const Scene> base, std::vector<Quad> masks, float value);
  float sample(double x, double y) const override;

 private:
  std::shared_ptr<const Scene> base_;
  std::vector<Quad> masks_;
  std::vector<MapRect> bounds_;
  float value_;
};

}  // namespace ghrc::sim
