#pragma once

// Space resection: damped Gauss-Newton adjustment of selected geometric-model
// parameters from image <-> ground correspondences, residuals in LCC metres.

#include <Eigen/Core>
#include <functional>
#include <string>
#include <vector>

#include "ghrc/elevation.hpp"
#include "ghrc/geomodel.hpp"
#include "ghrc/lcc.hpp"

namespace ghrc::resection {

using geomodel::GeodeticPoint;
using geomodel::GeometrySnapshot;

enum class Param {
  MirrorCubeRoll,
  MirrorCubePitch,
  EwRefAngle,
  NsRefAngle,
  AttitudeRoll,
  AttitudePitch,
  AttitudeYaw,
};

std::string to_string(Param p);
Param param_from_string(const std::string& s);

double get_param(const GeometrySnapshot& snap, Param p);
void set_param(GeometrySnapshot& snap, Param p, double value_deg);

struct ParamSelection {
  std::vector<Param> params{Param::MirrorCubeRoll, Param::MirrorCubePitch};
  void validate() const;  // non-empty, no duplicates
};

/// Frame pixel and the ground point it should map to.
struct Correspondence {
  double row = 0.0;
  double col = 0.0;
  GeodeticPoint target;
  double weight = 1.0;

  /// Relative mode: the target is the ground position of pixel (ref_row,
  /// ref_col) of an already corrected reference frame.
  static Correspondence relative(double row, double col, const geomodel::FrameGeometry& reference,
                                 double ref_row, double ref_col,
                                 const projection::ElevationSource& elev = {}, double weight = 1.0);
};

struct ResectionProblem {
  GeometrySnapshot snapshot;
  geomodel::CameraConstants consts;
  projection::LccParams lcc;
  projection::ElevationSource elevation;
  std::vector<Correspondence> points;
  ParamSelection selection;
};

/// Values of the selected parameters in `snapshot`.
Eigen::VectorXd initial_params(const ResectionProblem& pb);

/// target - model per correspondence (x then y, metres, scaled by sqrt(weight)).
/// Points whose line of sight misses the Earth contribute zeros and are
/// counted in `excluded`.
Eigen::VectorXd residuals(const Eigen::VectorXd& params, const ResectionProblem& pb,
                          int* excluded = nullptr);

/// Central-difference Jacobian of the model (not the residual) w.r.t. the
/// selected parameters; `step_deg` per parameter.
Eigen::MatrixXd jacobian_fd(const Eigen::VectorXd& params, const ResectionProblem& pb,
                            double step_deg = 1e-6);

/// Solves (J^T J + damping I) delta = J^T r. Throws SingularNormalEquations.
Eigen::VectorXd solve_update(const Eigen::MatrixXd& jac, const Eigen::VectorXd& r, double damping);

struct SolverOptions {
  int max_iterations = 50;
  double step_tolerance = 1e-7;  // on ||delta||, parameter units (deg)
  double fd_step = 1e-6;
};

struct SolverResult {
  Eigen::VectorXd params;
  double initial_cost = 0.0;  // ||r||^2
  double final_cost = 0.0;
  int iterations = 0;  // accepted steps
  bool converged = false;
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

/// Damped Gauss-Newton on residual r(x) = y - f(x) with model Jacobian J(x):
/// damping starts at 0, grows x10 when a step increases the cost and shrinks
/// /2 after an accepted step. Stops on ||delta|| < tolerance.
SolverResult gauss_newton(const ResidualFn& residual, const JacobianFn& jacobian, Eigen::VectorXd x0,
                          const SolverOptions& opt = {});

struct ResectionResult {
  GeometrySnapshot snapshot;  // updated
  std::vector<Param> params;
  Eigen::VectorXd initial_values;
  Eigen::VectorXd values;
  double initial_rms_m = 0.0;  // per point
  double final_rms_m = 0.0;
  int iterations = 0;
  bool converged = false;
  int excluded = 0;
};

ResectionResult resect(const ResectionProblem& pb, const SolverOptions& opt = {});

struct FrameObservations {
  GeometrySnapshot snapshot;
  std::vector<Correspondence> points;
};

struct CalibrationResult {
  double ew_ref_before_deg = 0.0, ns_ref_before_deg = 0.0;
  double ew_ref_deg = 0.0, ns_ref_deg = 0.0;
  double rms_before_m = 0.0, rms_after_m = 0.0;
  double max_before_m = 0.0, max_after_m = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Fits one (ew_ref, ns_ref) pair shared by every frame. Needs GCPs on >= 3 frames.
CalibrationResult calibrate_alignment(const std::vector<FrameObservations>& frames,
                                      const geomodel::CameraConstants& consts,
                                      const projection::LccParams& lcc,
                                      const projection::ElevationSource& elev = {},
                                      const SolverOptions& opt = {});

}  // namespace ghrc::resection
