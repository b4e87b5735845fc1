#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "ghrc/cli.hpp"
#include "ghrc/error.hpp"

namespace ghrc::cli {

namespace {

// Schema walker: every mapping lists its accepted keys, every failure carries
// the source position of the offending node.
class Reader {
 public:
  explicit Reader(std::string name) : name_(std::move(name)) {}

  [[noreturn]] void fail(const YAML::Node& n, const std::string& msg) const {
    const YAML::Mark m = n.Mark();
    std::ostringstream os;
    os << name_;
    if (m.line >= 0) os << ':' << m.line + 1 << ':' << m.column + 1;
    os << ": " << msg;
    throw ConfigurationError(os.str());
  }

  void require_map(const YAML::Node& n, const std::string& what) const {
    if (!n.IsMap()) fail(n, "'" + what + "' must be a mapping");
  }

  void check_keys(const YAML::Node& n, const std::string& what,
                  const std::set<std::string>& allowed) const {
    require_map(n, what);
    for (const auto& kv : n) {
      const std::string key = kv.first.as<std::string>();
      if (!allowed.count(key)) fail(kv.first, "unknown key '" + key + "' in " + what);
    }
  }

  template <class T>
  void get(const YAML::Node& parent, const char* key, T& out) const {
    const YAML::Node n = parent[key];
    if (!n) return;
    if (!n.IsScalar()) fail(n, std::string("'") + key + "' must be a scalar");
    try {
      out = n.as<T>();
    } catch (const YAML::BadConversion&) {
      fail(n, std::string("'") + key + "' has the wrong type");
    }
  }

  template <class T>
  void get_min(const YAML::Node& parent, const char* key, T& out, T lo) const {
    get(parent, key, out);
    if (parent[key] && out < lo) fail(parent[key], std::string("'") + key + "' is out of range");
  }

  template <class T>
  void get_positive(const YAML::Node& parent, const char* key, T& out) const {
    get(parent, key, out);
    if (parent[key] && !(out > T{0})) fail(parent[key], std::string("'") + key + "' must be > 0");
  }

 private:
  std::string name_;
};

void read_camera(const Reader& rd, const YAML::Node& n, geomodel::CameraConstants& c) {
  rd.check_keys(n, "camera",
                {"fov_deg", "altitude_km", "igfov_km", "detector_pixels", "ew_ground_gain",
                 "ns_ground_gain", "attitude_order", "mirror_order"});
  rd.get_positive(n, "fov_deg", c.fov_deg);
  rd.get_positive(n, "altitude_km", c.altitude_km);
  rd.get_positive(n, "igfov_km", c.igfov_km);
  rd.get_positive(n, "detector_pixels", c.detector_pixels);
  rd.get_positive(n, "ew_ground_gain", c.ew_ground_gain);
  rd.get_positive(n, "ns_ground_gain", c.ns_ground_gain);
  std::string order;
  if (n["attitude_order"]) {
    rd.get(n, "attitude_order", order);
    if (order == "roll_pitch_yaw") c.attitude_order = geomodel::AttitudeOrder::RollPitchYaw;
    else if (order == "yaw_pitch_roll") c.attitude_order = geomodel::AttitudeOrder::YawPitchRoll;
    else rd.fail(n["attitude_order"], "attitude_order must be roll_pitch_yaw or yaw_pitch_roll");
  }
  if (n["mirror_order"]) {
    rd.get(n, "mirror_order", order);
    if (order == "ns_then_ew") c.mirror_order = geomodel::MirrorOrder::NsThenEw;
    else if (order == "ew_then_ns") c.mirror_order = geomodel::MirrorOrder::EwThenNs;
    else rd.fail(n["mirror_order"], "mirror_order must be ns_then_ew or ew_then_ns");
  }
}

void read_lcc(const Reader& rd, const YAML::Node& n, projection::LccParams& p) {
  rd.check_keys(n, "lcc",
                {"std_parallel_1", "std_parallel_2", "lat_origin", "lon_origin", "false_easting",
                 "false_northing"});
  rd.get(n, "std_parallel_1", p.std_parallel_1);
  rd.get(n, "std_parallel_2", p.std_parallel_2);
  rd.get(n, "lat_origin", p.lat_origin);
  rd.get(n, "lon_origin", p.lon_origin);
  rd.get(n, "false_easting", p.false_easting);
  rd.get(n, "false_northing", p.false_northing);
}

void read_scan(const Reader& rd, const YAML::Node& n, RunConfig& cfg) {
  rd.check_keys(n, "scan",
                {"rows", "cols", "ew_step_deg", "ns_step_deg", "boustrophedon", "frame_period_s",
                 "band_count", "band_interval_s", "start_time_s", "center"});
  sim::ScanConfig& s = cfg.scan;
  rd.get_positive(n, "rows", s.rows);
  rd.get_positive(n, "cols", s.cols);
  rd.get_positive(n, "ew_step_deg", s.ew_step_deg);
  rd.get_positive(n, "ns_step_deg", s.ns_step_deg);
  rd.get(n, "boustrophedon", s.boustrophedon);
  rd.get_positive(n, "frame_period_s", s.frame_period_s);
  rd.get_positive(n, "band_count", s.band_count);
  rd.get_min(n, "band_interval_s", s.band_interval_s, 0.0);
  rd.get_min(n, "start_time_s", s.start_time_s, 0.0);
  if (const YAML::Node c = n["center"]) {
    rd.check_keys(c, "scan.center", {"lat_deg", "lon_deg", "height_m"});
    rd.get(c, "lat_deg", cfg.scan_center.lat_deg);
    rd.get(c, "lon_deg", cfg.scan_center.lon_deg);
    rd.get(c, "height_m", cfg.scan_center.height_m);
    if (std::abs(cfg.scan_center.lat_deg) > 90.0) rd.fail(c["lat_deg"], "latitude out of range");
  }
}

void read_scene(const Reader& rd, const YAML::Node& n, SceneConfig& sc,
                const std::filesystem::path& base_dir) {
  rd.check_keys(n, "scene",
                {"type", "raster", "seed", "octaves", "base_wavelength_m", "persistence", "mean",
                 "amplitude", "masks", "mask_value"});
  rd.get(n, "type", sc.type);
  if (sc.type != "fractal" && sc.type != "raster")
    rd.fail(n["type"], "scene type must be fractal or raster");
  if (n["raster"]) {
    std::string p;
    rd.get(n, "raster", p);
    sc.raster = std::filesystem::path(p).is_absolute() ? std::filesystem::path(p) : base_dir / p;
  }
  if (sc.type == "raster" && sc.raster.empty()) rd.fail(n, "scene type raster needs 'raster'");
  rd.get(n, "seed", sc.fractal.seed);
  rd.get_positive(n, "octaves", sc.fractal.octaves);
  rd.get_positive(n, "base_wavelength_m", sc.fractal.base_wavelength_m);
  rd.get_positive(n, "persistence", sc.fractal.persistence);
  rd.get(n, "mean", sc.fractal.mean);
  rd.get_min(n, "amplitude", sc.fractal.amplitude, 0.0);
  rd.get(n, "mask_value", sc.mask_value);
  if (const YAML::Node masks = n["masks"]) {
    if (!masks.IsSequence()) rd.fail(masks, "'masks' must be a list of quadrilaterals");
    for (const auto& q : masks) {
      if (!q.IsSequence() || q.size() != 4) rd.fail(q, "a mask needs 4 [x, y] corners");
      sim::MaskedScene::Quad quad;
      for (std::size_t k = 0; k < 4; ++k) {
        const YAML::Node pt = q[k];
        if (!pt.IsSequence() || pt.size() != 2) rd.fail(pt, "a mask corner is [x, y] in metres");
        try {
          quad[k] = {pt[0].as<double>(), pt[1].as<double>()};
        } catch (const YAML::BadConversion&) {
          rd.fail(pt, "mask corner coordinates must be numbers");
        }
      }
      sc.masks.push_back(quad);
    }
  }
}

RunConfig parse_node(const YAML::Node& root, const Reader& rd,
                     const std::filesystem::path& base_dir) {
  RunConfig cfg;
  if (!root || root.IsNull()) return cfg;
  rd.check_keys(root, "config",
                {"seed", "threads", "satellite", "camera", "lcc", "scan", "alignment", "bias",
                 "noise", "drift", "attitude", "elevation_m", "scene", "render", "registration",
                 "georef", "calibration", "mosaic"});

  std::uint64_t seed = 1;
  rd.get(root, "seed", seed);
  cfg.set_seed(seed);
  rd.get(root, "threads", cfg.threads);

  if (const YAML::Node n = root["satellite"]) {
    rd.check_keys(n, "satellite", {"longitude_deg"});
    rd.get(n, "longitude_deg", cfg.satellite_lon_deg);
  }
  if (const YAML::Node n = root["camera"]) read_camera(rd, n, cfg.scenario.consts);
  if (const YAML::Node n = root["lcc"]) read_lcc(rd, n, cfg.lcc);
  if (const YAML::Node n = root["scan"]) read_scan(rd, n, cfg);

  geomodel::AlignmentSet& al = cfg.scenario.nominal_alignment;
  if (const YAML::Node n = root["alignment"]) {
    rd.check_keys(n, "alignment",
                  {"mirrorcube_roll_deg", "mirrorcube_pitch_deg", "ew_ref_angle_deg",
                   "ns_ref_angle_deg"});
    rd.get(n, "mirrorcube_roll_deg", al.mirrorcube_to_instr_roll_deg);
    rd.get(n, "mirrorcube_pitch_deg", al.mirrorcube_to_instr_pitch_deg);
    rd.get(n, "ew_ref_angle_deg", al.ew_ref_angle_deg);
    rd.get(n, "ns_ref_angle_deg", al.ns_ref_angle_deg);
  }
  if (const YAML::Node n = root["bias"]) {
    sim::AlignmentBias& b = cfg.scenario.bias;
    rd.check_keys(n, "bias", {"mirrorcube_roll_deg", "mirrorcube_pitch_deg", "ew_ref_deg", "ns_ref_deg"});
    rd.get(n, "mirrorcube_roll_deg", b.mirrorcube_roll_deg);
    rd.get(n, "mirrorcube_pitch_deg", b.mirrorcube_pitch_deg);
    rd.get(n, "ew_ref_deg", b.ew_ref_deg);
    rd.get(n, "ns_ref_deg", b.ns_ref_deg);
  }
  if (const YAML::Node n = root["noise"]) {
    rd.check_keys(n, "noise", {"encoder_pp_counts", "settle_threshold_counts"});
    rd.get_min(n, "encoder_pp_counts", cfg.scenario.noise.pp_counts, 0);
    rd.get_min(n, "settle_threshold_counts", cfg.scenario.noise.settle_threshold_counts, 0);
    try {
      cfg.scenario.noise.validate();
    } catch (const Error& e) {
      rd.fail(n, e.what());
    }
  }
  if (const YAML::Node n = root["drift"]) {
    rd.check_keys(n, "drift", {"roll_rate_deg_s", "pitch_rate_deg_s", "jitter_pp_deg"});
    rd.get(n, "roll_rate_deg_s", cfg.scenario.drift.roll_rate_deg_s);
    rd.get(n, "pitch_rate_deg_s", cfg.scenario.drift.pitch_rate_deg_s);
    rd.get_min(n, "jitter_pp_deg", cfg.scenario.drift.jitter_pp_deg, 0.0);
  }
  if (const YAML::Node n = root["attitude"]) {
    rd.check_keys(n, "attitude", {"roll_deg", "pitch_deg", "yaw_deg"});
    rd.get(n, "roll_deg", cfg.scenario.base_attitude.roll_deg);
    rd.get(n, "pitch_deg", cfg.scenario.base_attitude.pitch_deg);
    rd.get(n, "yaw_deg", cfg.scenario.base_attitude.yaw_deg);
  }
  double elevation_m = 0.0;
  rd.get(root, "elevation_m", elevation_m);
  cfg.scenario.elevation = projection::ElevationSource::constant(elevation_m);

  if (const YAML::Node n = root["scene"]) read_scene(rd, n, cfg.scene, base_dir);
  if (const YAML::Node n = root["render"]) {
    rd.check_keys(n, "render", {"node_step"});
    rd.get_positive(n, "node_step", cfg.scenario.render_node_step);
  }
  if (const YAML::Node n = root["registration"]) {
    rd.check_keys(n, "registration",
                  {"reference_band", "chips_per_axis", "chip_size", "search_radius",
                   "confidence_threshold"});
    rd.get_min(n, "reference_band", cfg.bbr.reference_band, 0);
    rd.get_positive(n, "chips_per_axis", cfg.bbr.chips_per_axis);
    rd.get_positive(n, "chip_size", cfg.bbr.chip_size);
    rd.get_positive(n, "search_radius", cfg.bbr.search_radius);
    rd.get_positive(n, "confidence_threshold", cfg.bbr.threshold);
    cfg.mosaic.threshold = cfg.bbr.threshold;
    cfg.mosaic.phase.threshold = cfg.bbr.threshold;
  }
  if (const YAML::Node n = root["georef"]) {
    rd.check_keys(n, "georef", {"gsd_m"});
    rd.get_positive(n, "gsd_m", cfg.georef_gsd_m);
  }
  if (const YAML::Node n = root["calibration"]) {
    rd.check_keys(n, "calibration", {"gcps_per_axis", "gcp_file"});
    rd.get_min(n, "gcps_per_axis", cfg.gcps_per_axis, 2);
    if (n["gcp_file"]) {
      std::string p;
      rd.get(n, "gcp_file", p);
      cfg.gcp_file = std::filesystem::path(p).is_absolute() ? std::filesystem::path(p) : base_dir / p;
    }
  }
  if (const YAML::Node n = root["mosaic"]) {
    rd.check_keys(n, "mosaic", {"gsd_m", "feather_px", "overlap_mode"});
    rd.get_positive(n, "gsd_m", cfg.mosaic.gsd_m);
    rd.get_positive(n, "feather_px", cfg.mosaic.feather_px);
    if (n["overlap_mode"]) {
      std::string mode;
      rd.get(n, "overlap_mode", mode);
      if (mode == "consistent") cfg.mosaic.overlap_mode = mosaic::OverlapMode::Consistent;
      else if (mode == "paper-exact") cfg.mosaic.overlap_mode = mosaic::OverlapMode::PaperExact;
      else rd.fail(n["overlap_mode"], "overlap_mode must be consistent or paper-exact");
    }
  }

  // Cross-field checks.
  const auto& k = cfg.scenario.consts;
  try {
    k.validate();
  } catch (const Error& e) {
    rd.fail(root["camera"] ? root["camera"] : root, e.what());
  }
  const YAML::Node reg = root["registration"] ? root["registration"] : root;
  if (cfg.bbr.reference_band >= cfg.scan.band_count)
    rd.fail(reg, "reference_band must be below scan.band_count");
  if (cfg.bbr.chip_size + 2 * cfg.bbr.search_radius > k.detector_pixels)
    rd.fail(reg, "chip_size + 2 * search_radius exceeds the detector size");
  cfg.scenario.reference_band = cfg.bbr.reference_band;
  cfg.scenario.ephemeris = sim::geostationary_ephemeris(cfg.satellite_lon_deg);
  cfg.mosaic.lcc = cfg.lcc;
  cfg.mosaic.band = 0;  // stitching works on the extracted reference band
  return cfg;
}

}  // namespace

void RunConfig::set_seed(std::uint64_t s) {
  seed = s;
  scenario.seed = s;
  scenario.noise.rng_seed = s;
  scene.fractal.seed = s;
}

namespace {

RunConfig parse_text(const std::string& text, const std::string& name,
                     const std::filesystem::path& base_dir) {
  Reader rd(name);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    std::ostringstream os;
    os << name << ':' << e.mark.line + 1 << ':' << e.mark.column + 1 << ": " << e.msg;
    throw ConfigurationError(os.str());
  }
  return parse_node(root, rd, base_dir);
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& name) {
  return parse_text(text, name, std::filesystem::current_path());
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError(path.string() + ": cannot open config");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str(), path.string(), path.has_parent_path() ? path.parent_path() : ".");
}

}  // namespace ghrc::cli
