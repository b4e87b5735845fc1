#pragma once

// Frame-to-frame stitching: overlap prediction from mirror/platform angles,
// reference-frame selection with backtracking over failed correlations, per
// frame relative resection and single-resampling mosaic composition.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ghrc/georeference.hpp"
#include "ghrc/registration.hpp"
#include "ghrc/resection.hpp"
#include "ghrc/simulator.hpp"

namespace ghrc::mosaic {

using geomodel::CameraConstants;
using geomodel::GeometrySnapshot;
using sim::ScanDirection;

struct FramePointing {
  int id = 0;
  int grid_row = 0;
  int grid_col = 0;
  ScanDirection direction = ScanDirection::East;
  double m_roll_deg = 0.0;   // NS mirror angle
  double m_pitch_deg = 0.0;  // EW mirror angle
  double p_roll_deg = 0.0;
  double p_pitch_deg = 0.0;
};

/// Mirror angles from the encoder telemetry, platform angles from attitude.
FramePointing pointing_from_telemetry(int id, int grid_row, int grid_col, ScanDirection dir,
                                      const GeometrySnapshot& snap, const CameraConstants& consts);

enum class OverlapMode { Consistent, PaperExact };

/// EW overlap with the previous frame on the same row, clamped to [0, 1].
double overlap_with_previous(const FramePointing& curr, const FramePointing& prev,
                             const CameraConstants& consts);
/// NS overlap with the frame above. Consistent mode scales the mirror-roll
/// difference by the NS ground gain, paper-exact mode by 2.
double overlap_with_up(const FramePointing& curr, const FramePointing& up,
                       const CameraConstants& consts, OverlapMode mode = OverlapMode::Consistent);
/// Unclamped value of the same expressions (diagnostics).
double raw_overlap_with_up(const FramePointing& curr, const FramePointing& up,
                           const CameraConstants& consts, OverlapMode mode);

/// Where the reference frame lies relative to the current one.
enum class Side { Left, Right, Up };

/// Co-located chips of the current and reference frames with their origins.
struct ChipPair {
  registration::Image current;
  registration::Image reference;
  int cur_row0 = 0, cur_col0 = 0;
  int ref_row0 = 0, ref_col0 = 0;
};

/// Takes a chip (256 x 1024 for left/right, 1024 x 256 for up; shrunk to the
/// largest power of two fitting the strip) centred in the predicted overlap
/// strip of the current frame and the matching chip of the reference frame,
/// located through the predicted geometry. Throws InsufficientOverlap.
ChipPair extract_overlap_chips(const projection::Raster& cur_img, int cur_band,
                               const geomodel::FrameGeometry& cur_geom,
                               const projection::Raster& ref_img, int ref_band,
                               const geomodel::FrameGeometry& ref_geom, Side side, double fraction,
                               const projection::ElevationSource& elev = {});

enum class Relation { Neighbour, Up, Opposite };

/// Outcome of correlating a frame against a candidate reference: the shift of
/// the current chip relative to the reference chip, plus the chip origins.
struct Match {
  registration::ShiftEstimate shift;
  int cur_row0 = 0, cur_col0 = 0;
  int ref_row0 = 0, ref_col0 = 0;
  int rows = 0, cols = 0;
};

/// (current id, reference id, relation) -> match, or nullopt when nothing
/// could be correlated (homogeneous chips, too little overlap).
using Correlator = std::function<std::optional<Match>(int, int, Relation)>;

struct RefEntry {
  bool take_neighbour = false;
  bool take_up = false;
  bool take_opposite = false;
  std::optional<int> reference;
  std::optional<Match> match;
  bool system_only() const { return !take_neighbour && !take_up && !take_opposite; }
};

struct RefPlan {
  std::vector<RefEntry> entries;  // by frame id (acquisition order)
};

/// Reference selection over frames given in acquisition order: previous
/// neighbour on the row first, then the frame above; failures wait in a
/// pending chain that is resolved backwards (each against the frame acquired
/// after it) once a later frame anchors on the frame above. The chain is
/// dropped at row changes and when a frame takes its neighbour.
RefPlan select_references(const std::vector<FramePointing>& frames, const Correlator& correlate,
                          double threshold = registration::kConfidenceThreshold);

struct MosaicOptions {
  projection::LccParams lcc;
  double gsd_m = 100.0;
  double feather_px = 32.0;
  int band = 0;  // band of each frame image used for correlation
  double threshold = registration::kConfidenceThreshold;
  OverlapMode overlap_mode = OverlapMode::Consistent;
  registration::PhaseCorrelationOptions phase;
};

/// Input frame for stitching: one image (bands already co-registered), its
/// telemetry geometry and scan position.
struct MosaicFrame {
  FramePointing pointing;
  GeometrySnapshot snapshot;
  const projection::Raster* image = nullptr;
};

/// Correlator over real images using predicted overlaps and phase correlation.
Correlator image_correlator(const std::vector<MosaicFrame>& frames, const CameraConstants& consts,
                            const projection::ElevationSource& elev, const MosaicOptions& opt);

struct FrameCorrection {
  int id = 0;
  std::string mode;  // neighbour | up | opposite | system
  std::optional<int> reference;
  std::optional<resection::ResectionResult> resection;
  std::string error;
};

struct MosaicResult {
  projection::Raster mosaic;
  projection::GridSpec grid;
  std::vector<GeometrySnapshot> corrected;
  std::vector<FrameCorrection> corrections;
  std::vector<std::uint64_t> passes_per_frame;  // resampling passes of each frame
  projection::ResampleStats stats;
};

/// Corrects every referenced frame by relative resection (mirror-cube roll and
/// pitch) against its already corrected reference, then georeferences each
/// frame once onto a shared grid, feathering overlaps.
MosaicResult build_mosaic(const std::vector<MosaicFrame>& frames, const RefPlan& plan,
                          const CameraConstants& consts, const projection::ElevationSource& elev,
                          const MosaicOptions& opt);

struct SeamEdge {
  int a = 0, b = 0;
  bool vertical = false;  // a above b
  double d_line_px = 0.0, d_pixel_px = 0.0;
  double magnitude_px = 0.0;
  double confidence = 0.0;
  bool confident = false;
  std::string error;
};

struct SeamReport {
  std::vector<SeamEdge> edges;
  double rms_px = 0.0;  // over confident edges
  double max_px = 0.0;
  int confident_edges = 0;
};

/// Residual misalignment of frame b relative to frame a: both are
/// georeferenced onto their common overlap with the given geometries and phase
/// correlated; the shift is expressed in detector pixels of b.
SeamEdge measure_seam(const MosaicFrame& a, const GeometrySnapshot& ga, const MosaicFrame& b,
                      const GeometrySnapshot& gb, const CameraConstants& consts,
                      const projection::ElevationSource& elev, const MosaicOptions& opt);

/// Residual misalignment of every adjacent frame pair: both frames are
/// georeferenced onto their common overlap with the given geometries and phase
/// correlated; shifts are expressed in detector pixels of the second frame.
SeamReport seam_metric(const std::vector<MosaicFrame>& frames,
                       const std::vector<GeometrySnapshot>& geometry, const CameraConstants& consts,
                       const projection::ElevationSource& elev, const MosaicOptions& opt);

}  // namespace ghrc::mosaic
