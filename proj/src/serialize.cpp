#include "ghrc/serialize.hpp"

#include <fstream>

#include "ghrc/error.hpp"

using nlohmann::json;

namespace {

json mat_to_json(const Eigen::Matrix3d& m) {
  json j = json::array();
  for (int r = 0; r < 3; ++r) j.push_back({m(r, 0), m(r, 1), m(r, 2)});
  return j;
}

Eigen::Matrix3d mat_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ghrc::ConfigurationError("matrix must be 3x3");
  Eigen::Matrix3d m;
  for (int r = 0; r < 3; ++r) {
    if (!j[r].is_array() || j[r].size() != 3) throw ghrc::ConfigurationError("matrix must be 3x3");
    for (int c = 0; c < 3; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

json vec_to_json(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

Eigen::Vector3d vec_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ghrc::ConfigurationError("vector must have 3 entries");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

namespace ghrc::geodesy {

void to_json(json& j, const GeodeticPoint& p) {
  j = {{"lat_deg", p.lat_deg}, {"lon_deg", p.lon_deg}, {"height_m", p.height_m}};
}
void from_json(const json& j, GeodeticPoint& p) {
  p.lat_deg = j.at("lat_deg").get<double>();
  p.lon_deg = j.at("lon_deg").get<double>();
  p.height_m = j.value("height_m", 0.0);
}

}  // namespace ghrc::geodesy

namespace ghrc::projection {

void to_json(json& j, const LccParams& p) {
  j = {{"std_parallel_1", p.std_parallel_1}, {"std_parallel_2", p.std_parallel_2},
       {"lat_origin", p.lat_origin},         {"lon_origin", p.lon_origin},
       {"false_easting", p.false_easting},   {"false_northing", p.false_northing}};
}
void from_json(const json& j, LccParams& p) {
  p.std_parallel_1 = j.at("std_parallel_1").get<double>();
  p.std_parallel_2 = j.at("std_parallel_2").get<double>();
  p.lat_origin = j.at("lat_origin").get<double>();
  p.lon_origin = j.at("lon_origin").get<double>();
  p.false_easting = j.value("false_easting", 0.0);
  p.false_northing = j.value("false_northing", 0.0);
}

}  // namespace ghrc::projection

namespace ghrc::geomodel {

void to_json(json& j, const EncoderReading& e) {
  j = {{"ew_counts", e.ew_counts}, {"ns_counts", e.ns_counts}};
}
void from_json(const json& j, EncoderReading& e) {
  e.ew_counts = j.at("ew_counts").get<std::uint32_t>();
  e.ns_counts = j.at("ns_counts").get<std::uint32_t>();
}

void to_json(json& j, const Attitude& a) {
  j = {{"roll_deg", a.roll_deg}, {"pitch_deg", a.pitch_deg}, {"yaw_deg", a.yaw_deg}};
}
void from_json(const json& j, Attitude& a) {
  a.roll_deg = j.value("roll_deg", 0.0);
  a.pitch_deg = j.value("pitch_deg", 0.0);
  a.yaw_deg = j.value("yaw_deg", 0.0);
}

void to_json(json& j, const Ephemeris& e) {
  j = {{"position_ecef_km", vec_to_json(e.position_ecef_km)},
       {"velocity_ecef_kms", vec_to_json(e.velocity_ecef_kms)},
       {"epoch_s", e.epoch_s}};
}
void from_json(const json& j, Ephemeris& e) {
  e.position_ecef_km = vec_from_json(j.at("position_ecef_km"));
  e.velocity_ecef_kms = vec_from_json(j.at("velocity_ecef_kms"));
  e.epoch_s = j.value("epoch_s", 0.0);
}

void to_json(json& j, const AlignmentSet& a) {
  j = {{"focal_to_sensor", mat_to_json(a.focal_to_sensor)},
       {"sensor_to_instr", mat_to_json(a.sensor_to_instr)},
       {"mirrorcube_to_instr_roll_deg", a.mirrorcube_to_instr_roll_deg},
       {"mirrorcube_to_instr_pitch_deg", a.mirrorcube_to_instr_pitch_deg},
       {"ew_ref_angle_deg", a.ew_ref_angle_deg},
       {"ns_ref_angle_deg", a.ns_ref_angle_deg},
       {"distortion",
        {{"alpha_deg", a.distortion.alpha_deg},
         {"beta_wedge_deg", a.distortion.beta_wedge_deg},
         {"gamma_deg", a.distortion.gamma_deg},
         {"psi_wedge_deg", a.distortion.psi_wedge_deg}}}};
}
void from_json(const json& j, AlignmentSet& a) {
  a = AlignmentSet{};
  if (j.contains("focal_to_sensor")) a.focal_to_sensor = mat_from_json(j["focal_to_sensor"]);
  if (j.contains("sensor_to_instr")) a.sensor_to_instr = mat_from_json(j["sensor_to_instr"]);
  a.mirrorcube_to_instr_roll_deg = j.value("mirrorcube_to_instr_roll_deg", 0.0);
  a.mirrorcube_to_instr_pitch_deg = j.value("mirrorcube_to_instr_pitch_deg", 0.0);
  a.ew_ref_angle_deg = j.value("ew_ref_angle_deg", a.ew_ref_angle_deg);
  a.ns_ref_angle_deg = j.value("ns_ref_angle_deg", a.ns_ref_angle_deg);
  if (j.contains("distortion")) {
    const json& d = j["distortion"];
    a.distortion.alpha_deg = d.value("alpha_deg", 0.0);
    a.distortion.beta_wedge_deg = d.value("beta_wedge_deg", 0.0);
    a.distortion.gamma_deg = d.value("gamma_deg", 0.0);
    a.distortion.psi_wedge_deg = d.value("psi_wedge_deg", 0.0);
  }
}

void to_json(json& j, const CameraConstants& c) {
  j = {{"fov_deg", c.fov_deg},
       {"altitude_km", c.altitude_km},
       {"igfov_km", c.igfov_km},
       {"detector_pixels", c.detector_pixels},
       {"encoder_lsb_deg", c.encoder_lsb_deg},
       {"ew_ground_gain", c.ew_ground_gain},
       {"ns_ground_gain", c.ns_ground_gain},
       {"attitude_order",
        c.attitude_order == AttitudeOrder::RollPitchYaw ? "roll_pitch_yaw" : "yaw_pitch_roll"},
       {"mirror_order", c.mirror_order == MirrorOrder::NsThenEw ? "ns_then_ew" : "ew_then_ns"}};
}
void from_json(const json& j, CameraConstants& c) {
  c = CameraConstants{};
  c.fov_deg = j.value("fov_deg", c.fov_deg);
  c.altitude_km = j.value("altitude_km", c.altitude_km);
  c.igfov_km = j.value("igfov_km", c.igfov_km);
  c.detector_pixels = j.value("detector_pixels", c.detector_pixels);
  c.encoder_lsb_deg = j.value("encoder_lsb_deg", c.encoder_lsb_deg);
  c.ew_ground_gain = j.value("ew_ground_gain", c.ew_ground_gain);
  c.ns_ground_gain = j.value("ns_ground_gain", c.ns_ground_gain);
  const std::string ao = j.value("attitude_order", std::string("roll_pitch_yaw"));
  if (ao == "roll_pitch_yaw") c.attitude_order = AttitudeOrder::RollPitchYaw;
  else if (ao == "yaw_pitch_roll") c.attitude_order = AttitudeOrder::YawPitchRoll;
  else throw ConfigurationError("unknown attitude_order '" + ao + "'");
  const std::string mo = j.value("mirror_order", std::string("ns_then_ew"));
  if (mo == "ns_then_ew") c.mirror_order = MirrorOrder::NsThenEw;
  else if (mo == "ew_then_ns") c.mirror_order = MirrorOrder::EwThenNs;
  else throw ConfigurationError("unknown mirror_order '" + mo + "'");
}

void to_json(json& j, const GeometrySnapshot& s) {
  j = {{"ephemeris", s.ephemeris},
       {"attitude", s.attitude},
       {"encoder", s.encoder},
       {"alignment", s.alignment},
       {"time_s", s.time_s}};
}
void from_json(const json& j, GeometrySnapshot& s) {
  s.ephemeris = j.at("ephemeris").get<Ephemeris>();
  s.attitude = j.at("attitude").get<Attitude>();
  s.encoder = j.at("encoder").get<EncoderReading>();
  s.alignment = j.at("alignment").get<AlignmentSet>();
  s.time_s = j.value("time_s", 0.0);
}

}  // namespace ghrc::geomodel

namespace ghrc::registration {

void to_json(json& j, const ShiftEstimate& e) {
  j = {{"d_line", e.d_line},
       {"d_pixel", e.d_pixel},
       {"confidence", e.confidence},
       {"confident", e.confident},
       {"fallback", e.fallback}};
}

void to_json(json& j, const BandRegistration& b) {
  j = {{"band", b.band},
       {"reference", b.is_reference},
       {"estimate", b.estimate},
       {"chips_total", b.chips_total},
       {"chips_confident", b.chips_confident},
       {"uncorrectable", b.uncorrectable},
       {"applied_shift", {b.uncorrectable ? 0.0 : b.estimate.d_line,
                          b.uncorrectable ? 0.0 : b.estimate.d_pixel}}};
}

}  // namespace ghrc::registration

namespace ghrc::resection {

void to_json(json& j, const ResectionResult& r) {
  json params = json::object();
  for (std::size_t k = 0; k < r.params.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    params[to_string(r.params[k])] = {{"initial", r.initial_values(i)}, {"final", r.values(i)}};
  }
  j = {{"params", params},
       {"initial_rms_m", r.initial_rms_m},
       {"final_rms_m", r.final_rms_m},
       {"iterations", r.iterations},
       {"converged", r.converged},
       {"excluded_points", r.excluded}};
}

void to_json(json& j, const CalibrationResult& r) {
  j = {{"ew_ref_angle_deg", {{"before", r.ew_ref_before_deg}, {"after", r.ew_ref_deg}}},
       {"ns_ref_angle_deg", {{"before", r.ns_ref_before_deg}, {"after", r.ns_ref_deg}}},
       {"location_error_m",
        {{"rms_before", r.rms_before_m},
         {"rms_after", r.rms_after_m},
         {"max_before", r.max_before_m},
         {"max_after", r.max_after_m}}},
       {"iterations", r.iterations},
       {"converged", r.converged}};
}

}  // namespace ghrc::resection

namespace ghrc::sim {

void to_json(json& j, const TruthRecord& r) {
  j = {{"frame_id", r.frame_id},
       {"band", r.band},
       {"time_s", r.time_s},
       {"commanded", r.commanded},
       {"realized", r.realized},
       {"attitude", r.attitude},
       {"shift_vs_band0", {r.shift_vs_band0_line, r.shift_vs_band0_pixel}},
       {"shift_vs_ref", {r.shift_vs_ref_line, r.shift_vs_ref_pixel}},
       {"knowledge_error", {r.knowledge_error_line, r.knowledge_error_pixel}},
       {"corners", json(std::vector<geodesy::GeodeticPoint>(r.corners.begin(), r.corners.end()))}};
}

void from_json(const json& j, TruthRecord& r) {
  r.frame_id = j.at("frame_id").get<int>();
  r.band = j.at("band").get<int>();
  r.time_s = j.at("time_s").get<double>();
  r.commanded = j.at("commanded").get<geomodel::EncoderReading>();
  r.realized = j.at("realized").get<geomodel::EncoderReading>();
  r.attitude = j.at("attitude").get<geomodel::Attitude>();
  r.shift_vs_band0_line = j.at("shift_vs_band0").at(0).get<double>();
  r.shift_vs_band0_pixel = j.at("shift_vs_band0").at(1).get<double>();
  r.shift_vs_ref_line = j.at("shift_vs_ref").at(0).get<double>();
  r.shift_vs_ref_pixel = j.at("shift_vs_ref").at(1).get<double>();
  r.knowledge_error_line = j.at("knowledge_error").at(0).get<double>();
  r.knowledge_error_pixel = j.at("knowledge_error").at(1).get<double>();
  const auto corners = j.at("corners").get<std::vector<geodesy::GeodeticPoint>>();
  for (std::size_t k = 0; k < 4 && k < corners.size(); ++k) r.corners[k] = corners[k];
}

}  // namespace ghrc::sim

namespace ghrc::mosaic {

void to_json(json& j, const FramePointing& p) {
  j = {{"id", p.id},
       {"grid_row", p.grid_row},
       {"grid_col", p.grid_col},
       {"direction", p.direction == ScanDirection::East ? "east" : "west"},
       {"m_roll_deg", p.m_roll_deg},
       {"m_pitch_deg", p.m_pitch_deg},
       {"p_roll_deg", p.p_roll_deg},
       {"p_pitch_deg", p.p_pitch_deg}};
}

void from_json(const json& j, FramePointing& p) {
  p.id = j.at("id").get<int>();
  p.grid_row = j.at("grid_row").get<int>();
  p.grid_col = j.at("grid_col").get<int>();
  p.direction = j.at("direction").get<std::string>() == "west" ? ScanDirection::West
                                                               : ScanDirection::East;
  p.m_roll_deg = j.at("m_roll_deg").get<double>();
  p.m_pitch_deg = j.at("m_pitch_deg").get<double>();
  p.p_roll_deg = j.value("p_roll_deg", 0.0);
  p.p_pitch_deg = j.value("p_pitch_deg", 0.0);
}

void to_json(json& j, const RefPlan& p) {
  j = json::array();
  for (std::size_t i = 0; i < p.entries.size(); ++i) {
    const RefEntry& e = p.entries[i];
    json o = {{"frame_id", static_cast<int>(i)},
              {"take_neighbour", e.take_neighbour},
              {"take_up", e.take_up},
              {"take_opposite", e.take_opposite},
              {"reference", e.reference ? json(*e.reference) : json(nullptr)},
              {"shift", e.match ? json(e.match->shift) : json(nullptr)}};
    j.push_back(o);
  }
}

void to_json(json& j, const FrameCorrection& c) {
  j = {{"frame_id", c.id},
       {"mode", c.mode},
       {"reference", c.reference ? json(*c.reference) : json(nullptr)},
       {"resection", c.resection ? json(*c.resection) : json(nullptr)},
       {"error", c.error}};
}

void to_json(json& j, const SeamReport& r) {
  json edges = json::array();
  for (const auto& e : r.edges)
    edges.push_back({{"a", e.a},
                     {"b", e.b},
                     {"vertical", e.vertical},
                     {"shift_px", {e.d_line_px, e.d_pixel_px}},
                     {"magnitude_px", e.magnitude_px},
                     {"confidence", e.confidence},
                     {"confident", e.confident},
                     {"error", e.error}});
  j = {{"edges", edges},
       {"rms_px", r.rms_px},
       {"max_px", r.max_px},
       {"confident_edges", r.confident_edges}};
}

}  // namespace ghrc::mosaic

namespace ghrc::io {

void to_json(json& j, const Gcp& g) {
  j = {{"frame_id", g.frame_id}, {"row", g.row},     {"col", g.col},
       {"lat", g.point.lat_deg}, {"lon", g.point.lon_deg}, {"height", g.point.height_m},
       {"weight", g.weight}};
}

void from_json(const json& j, Gcp& g) {
  g.frame_id = j.at("frame_id").get<int>();
  g.row = j.at("row").get<double>();
  g.col = j.at("col").get<double>();
  g.point.lat_deg = j.at("lat").get<double>();
  g.point.lon_deg = j.at("lon").get<double>();
  g.point.height_m = j.value("height", 0.0);
  g.weight = j.value("weight", 1.0);
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigurationError(path.string() + ": " + e.what());
  }
}

void write_json(const json& j, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace ghrc::io
