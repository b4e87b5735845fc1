#pragma once

// Operator commands. Every command reads a run config, works inside one output
// directory and merges its section into the cumulative `report.json` there.
//
// Output directory layout:
//   frames/frame_NNN.{raw,json}   simulated frame, all bands
//   frames/frame_NNN.geom.json    scan position + per-band telemetry snapshots
//   truth.json                    truth log (per band records + true snapshots)
//   gcps.json                     ground control points (true geolocation)
//   quicklook/frame_NNN.png       reference band stretch
//   georef/frame_NNN.{raw,json}   per-frame georeferenced rasters
//   bbr/frame_NNN.{raw,json}      band-registered frames
//   calibration.json              fitted EW/NS reference angles
//   mosaic/mosaic.{raw,json,png}  stitched reference-band mosaic
//   mosaic/refplan.json           reference selection per frame
//   mosaic/seams.json             seam shifts before/after correction
//   report.json                   run report, one section per command

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ghrc/mosaic.hpp"
#include "ghrc/registration.hpp"
#include "ghrc/scene.hpp"
#include "ghrc/simulator.hpp"

namespace ghrc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 1;
inline constexpr int kExitInvalid = 2;

struct SceneConfig {
  std::string type = "fractal";  // fractal | raster
  std::filesystem::path raster;  // texture for type raster
  sim::FractalParams fractal;
  std::vector<sim::MaskedScene::Quad> masks;  // LCC metres
  float mask_value = 100.0f;
};

struct RunConfig {
  std::uint64_t seed = 1;
  unsigned threads = 0;
  double satellite_lon_deg = 55.0;
  geomodel::GeodeticPoint scan_center{24.0, 80.0, 0.0};
  sim::Scenario scenario;
  sim::ScanConfig scan;
  projection::LccParams lcc;
  SceneConfig scene;
  registration::BbrOptions bbr;
  mosaic::MosaicOptions mosaic;
  double georef_gsd_m = 100.0;
  int gcps_per_axis = 3;
  std::optional<std::filesystem::path> gcp_file;

  /// Applies the seed to every seeded component.
  void set_seed(std::uint64_t s);
};

/// Parses and validates a YAML run config. Unknown keys, wrong types and
/// out-of-range values raise ConfigurationError("<file>:<line>:<col>: ...").
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& text, const std::string& name = "<config>");

int cmd_simulate(const RunConfig& cfg, const std::filesystem::path& out);
int cmd_georef(const RunConfig& cfg, const std::filesystem::path& out);
int cmd_bbr(const RunConfig& cfg, const std::filesystem::path& out);
int cmd_calibrate(const RunConfig& cfg, const std::filesystem::path& out);
int cmd_mosaic(const RunConfig& cfg, const std::filesystem::path& out);
int cmd_eval(const RunConfig& cfg, const std::filesystem::path& out);

/// Runs a command by name, mapping errors to the exit-code contract
/// (2 for invalid input, diagnostics on stderr).
int run_command(const std::string& name, const std::filesystem::path& config,
                const std::filesystem::path& out, std::optional<unsigned> threads,
                std::optional<std::uint64_t> seed);

}  // namespace ghrc::cli
