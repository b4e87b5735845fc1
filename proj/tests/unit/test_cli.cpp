#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>
#include <string>
#include <sys/wait.h>

#include "ghrc/cli.hpp"
#include "ghrc/error.hpp"
#include "ghrc/serialize.hpp"

namespace fs = std::filesystem;
using namespace ghrc;

namespace {

// 2 x 2 scan of 512 px frames with the flight IFOV; three bands. No drift:
// the overlap formula's platform term scales with 1 / IGFOV and would
// dominate on a quarter-size frame.
const char* kSmall = R"(seed: 11
camera:
  detector_pixels: 512
  fov_deg: 0.044
  igfov_km: 27.5
scan:
  rows: 2
  cols: 2
  ew_step_deg: 0.0175
  ns_step_deg: 0.035
  band_count: 3
  center: {lat_deg: 24.0, lon_deg: 80.0}
noise:
  encoder_pp_counts: 2
drift:
  roll_rate_deg_s: 0
  pitch_rate_deg_s: 0
scene:
  base_wavelength_m: 8000
registration:
  reference_band: 1
  chips_per_axis: 3
  chip_size: 128
  search_radius: 32
georef:
  gsd_m: 200
mosaic:
  gsd_m: 60
)";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ghrc_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

struct Run {
  int code = -1;
  std::string err;
};

// Runs the ghrc binary with stderr captured to a file.
Run ghrc_bin(const std::string& args, const fs::path& dir) {
  const char* bin = std::getenv("GHRC_BIN");
  REQUIRE_MESSAGE(bin != nullptr, "GHRC_BIN must point at the ghrc executable");
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string(bin) + " " + args + " > /dev/null 2> " + err.string();
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = slurp(err);
  return r;
}

}  // namespace

TEST_CASE("config parsing fills the run config") {
  const auto cfg = cli::parse_config(kSmall, "small.yaml");
  CHECK(cfg.seed == 11);
  CHECK(cfg.scenario.consts.detector_pixels == 512);
  CHECK(cfg.scan.band_count == 3);
  CHECK(cfg.scenario.reference_band == 1);
  CHECK(cfg.bbr.reference_band == 1);
  CHECK(cfg.scenario.noise.pp_counts == 2);
  CHECK(cfg.scene.fractal.seed == 11);
  CHECK(cfg.mosaic.gsd_m == 60.0);
}

TEST_CASE("config errors name the file and line") {
  try {
    cli::parse_config("seed: 3\nscan:\n  rows: 2\n  colums: 3\n", "bad.yaml");
    FAIL("unknown key accepted");
  } catch (const ConfigurationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("bad.yaml:4") != std::string::npos);
    CHECK(msg.find("colums") != std::string::npos);
  }
  CHECK_THROWS_AS(cli::parse_config("scan: {rows: -1}\n"), ConfigurationError);
  CHECK_THROWS_AS(cli::parse_config("scan: {rows: two}\n"), ConfigurationError);
  CHECK_THROWS_AS(cli::parse_config("registration: {reference_band: 6}\n"), ConfigurationError);
  CHECK_THROWS_AS(cli::parse_config("mosaic: {overlap_mode: loose}\n"), ConfigurationError);
  CHECK_THROWS_AS(cli::parse_config("scan: [1, 2\n"), ConfigurationError);
  CHECK_THROWS_AS(cli::load_config("/nonexistent/ghrc.yaml"), ConfigurationError);
}

TEST_CASE("malformed input exits with code 2") {
  const auto dir = scratch("invalid");
  const auto bad = write_file(dir / "bad.yaml", "scan:\n  rows: 0\n");
  Run r = ghrc_bin("simulate --config " + bad.string() + " --out " + (dir / "out").string(), dir);
  CHECK(r.code == 2);
  CHECK(r.err.find("bad.yaml") != std::string::npos);

  r = ghrc_bin("simulate --bogus-flag", dir);
  CHECK(r.code == 2);
  CHECK(!r.err.empty());

  // Downstream commands need the simulated frames.
  const auto good = write_file(dir / "good.yaml", kSmall);
  r = ghrc_bin("bbr --config " + good.string() + " --out " + (dir / "empty").string(), dir);
  CHECK(r.code == 2);
  CHECK(!r.err.empty());
}

TEST_CASE("simulate is deterministic and the pipeline runs end to end") {
  const auto dir = scratch("pipeline");
  const auto cfg_path = write_file(dir / "small.yaml", kSmall);
  const auto a = dir / "a", b = dir / "b";
  const std::string cfg = " --config " + cfg_path.string() + " --out ";
  REQUIRE(ghrc_bin("simulate" + cfg + a.string(), dir).code == 0);
  REQUIRE(ghrc_bin("simulate" + cfg + b.string(), dir).code == 0);
  for (const char* f : {"frames/frame_000.raw", "frames/frame_003.json", "truth.json", "gcps.json",
                        "quicklook/frame_002.png"})
    CHECK_MESSAGE(slurp(a / f) == slurp(b / f), f);
  // A different seed changes the imagery.
  const auto c = dir / "c";
  REQUIRE(ghrc_bin("simulate" + cfg + c.string() + " --seed 12", dir).code == 0);
  CHECK(slurp(a / "frames/frame_000.raw") != slurp(c / "frames/frame_000.raw"));

  CHECK(ghrc_bin("bbr" + cfg + a.string(), dir).code == 0);
  const auto report = io::read_json(a / "report.json");
  REQUIRE(report["stages"].contains("bbr"));
  // Applied shifts match the truth log to a fraction of a pixel.
  const auto truth = io::read_json(a / "truth.json");
  int checked = 0;
  for (const auto& f : report["stages"]["bbr"]["frames"]) {
    const int id = f["id"];
    for (const auto& band : f["bands"]) {
      const int k = band["band"];
      const auto& rec = truth["frames"][id]["records"][k];
      CHECK(std::abs(double(band["applied_shift"][0]) - double(rec["shift_vs_ref"][0])) < 0.25);
      CHECK(std::abs(double(band["applied_shift"][1]) - double(rec["shift_vs_ref"][1])) < 0.25);
      ++checked;
    }
  }
  CHECK(checked == 12);

  CHECK(ghrc_bin("georef" + cfg + a.string(), dir).code == 0);
  CHECK(fs::exists(a / "georef/frame_000.raw"));
  CHECK(ghrc_bin("calibrate" + cfg + a.string(), dir).code == 0);
  CHECK(fs::exists(a / "calibration.json"));
  const Run m = ghrc_bin("mosaic" + cfg + a.string(), dir);
  CHECK(m.code == 0);
  CHECK(fs::exists(a / "mosaic/mosaic.png"));
  CHECK(io::read_json(a / "mosaic/refplan.json").size() == 4);
  CHECK(io::read_json(a / "mosaic/seams.json").contains("after"));
  const auto rep = io::read_json(a / "report.json");
  CHECK(double(rep["stages"]["mosaic"]["seam_after"]["rms_px"]) < 1.0);
  CHECK(ghrc_bin("eval" + cfg + a.string(), dir).code == 0);
}

TEST_CASE("paper-exact overlap mode warns about the NS gap") {
  const auto dir = scratch("exact");
  const auto cfg_path = write_file(
      dir / "exact.yaml", std::string(kSmall) + "  overlap_mode: paper-exact\n");
  const std::string cfg = " --config " + cfg_path.string() + " --out " + (dir / "o").string();
  REQUIRE(ghrc_bin("simulate" + cfg, dir).code == 0);
  const Run m = ghrc_bin("mosaic" + cfg, dir);
  CHECK(m.err.find("warning") != std::string::npos);
  const auto rep = io::read_json(dir / "o/report.json");
  CHECK(!rep["stages"]["mosaic"]["warnings"].empty());
}

TEST_CASE("band registration of a noiseless scan reports near-zero shifts") {
  const auto dir = scratch("noiseless");
  std::string text = kSmall;
  text.replace(text.find("encoder_pp_counts: 2"), 20, "encoder_pp_counts: 0");
  const auto cfg_path = write_file(dir / "quiet.yaml", text);
  const std::string cfg = " --config " + cfg_path.string() + " --out " + (dir / "o").string();
  REQUIRE(ghrc_bin("simulate" + cfg, dir).code == 0);
  REQUIRE(ghrc_bin("bbr" + cfg, dir).code == 0);
  const auto rep = io::read_json(dir / "o/report.json");
  int bands = 0;
  for (const auto& f : rep["stages"]["bbr"]["frames"])
    for (const auto& b : f["bands"]) {
      CHECK(std::abs(double(b["applied_shift"][0])) < 0.05);
      CHECK(std::abs(double(b["applied_shift"][1])) < 0.05);
      ++bands;
    }
  CHECK(bands == 12);
}
