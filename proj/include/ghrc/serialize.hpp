#pragma once

// JSON forms of the domain types (snapshots, truth logs, GCP files and the
// per-stage report sections).

#include <filesystem>
#include <nlohmann/json.hpp>
#include <vector>

#include "ghrc/geomodel.hpp"
#include "ghrc/lcc.hpp"
#include "ghrc/mosaic.hpp"
#include "ghrc/registration.hpp"
#include "ghrc/resection.hpp"
#include "ghrc/simulator.hpp"

namespace ghrc::geodesy {
void to_json(nlohmann::json& j, const GeodeticPoint& p);
void from_json(const nlohmann::json& j, GeodeticPoint& p);
}  // namespace ghrc::geodesy

namespace ghrc::projection {
void to_json(nlohmann::json& j, const LccParams& p);
void from_json(const nlohmann::json& j, LccParams& p);
}  // namespace ghrc::projection

namespace ghrc::geomodel {
void to_json(nlohmann::json& j, const EncoderReading& e);
void from_json(const nlohmann::json& j, EncoderReading& e);
void to_json(nlohmann::json& j, const Attitude& a);
void from_json(const nlohmann::json& j, Attitude& a);
void to_json(nlohmann::json& j, const Ephemeris& e);
void from_json(const nlohmann::json& j, Ephemeris& e);
void to_json(nlohmann::json& j, const AlignmentSet& a);
void from_json(const nlohmann::json& j, AlignmentSet& a);
void to_json(nlohmann::json& j, const CameraConstants& c);
void from_json(const nlohmann::json& j, CameraConstants& c);
void to_json(nlohmann::json& j, const GeometrySnapshot& s);
void from_json(const nlohmann::json& j, GeometrySnapshot& s);
}  // namespace ghrc::geomodel

namespace ghrc::registration {
void to_json(nlohmann::json& j, const ShiftEstimate& e);
void to_json(nlohmann::json& j, const BandRegistration& b);
}  // namespace ghrc::registration

namespace ghrc::resection {
void to_json(nlohmann::json& j, const ResectionResult& r);
void to_json(nlohmann::json& j, const CalibrationResult& r);
}  // namespace ghrc::resection

namespace ghrc::sim {
void to_json(nlohmann::json& j, const TruthRecord& r);
void from_json(const nlohmann::json& j, TruthRecord& r);
}  // namespace ghrc::sim

namespace ghrc::mosaic {
void to_json(nlohmann::json& j, const FramePointing& p);
void from_json(const nlohmann::json& j, FramePointing& p);
void to_json(nlohmann::json& j, const RefPlan& p);
void to_json(nlohmann::json& j, const FrameCorrection& c);
void to_json(nlohmann::json& j, const SeamReport& r);
}  // namespace ghrc::mosaic

namespace ghrc::io {

/// Ground control point tied to a frame.
struct Gcp {
  int frame_id = 0;
  double row = 0.0, col = 0.0;
  geodesy::GeodeticPoint point;
  double weight = 1.0;
};
void to_json(nlohmann::json& j, const Gcp& g);
void from_json(const nlohmann::json& j, Gcp& g);

nlohmann::json read_json(const std::filesystem::path& path);
/// Writes with a fixed layout (2-space indent, trailing newline) so equal
/// content gives equal bytes.
void write_json(const nlohmann::json& j, const std::filesystem::path& path);

}  // namespace ghrc::io
