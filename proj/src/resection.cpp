#include "ghrc/resection.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "ghrc/error.hpp"

namespace ghrc::resection {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string to_string(Param p) {
  switch (p) {
    case Param::MirrorCubeRoll: return "mirrorcube_roll";
    case Param::MirrorCubePitch: return "mirrorcube_pitch";
    case Param::EwRefAngle: return "ew_ref_angle";
    case Param::NsRefAngle: return "ns_ref_angle";
    case Param::AttitudeRoll: return "attitude_roll";
    case Param::AttitudePitch: return "attitude_pitch";
    case Param::AttitudeYaw: return "attitude_yaw";
  }
  return "?";
}

Param param_from_string(const std::string& s) {
  for (Param p : {Param::MirrorCubeRoll, Param::MirrorCubePitch, Param::EwRefAngle,
                  Param::NsRefAngle, Param::AttitudeRoll, Param::AttitudePitch,
                  Param::AttitudeYaw})
    if (to_string(p) == s) return p;
  throw ConfigurationError("unknown resection parameter '" + s + "'");
}

double get_param(const GeometrySnapshot& snap, Param p) {
  switch (p) {
    case Param::MirrorCubeRoll: return snap.alignment.mirrorcube_to_instr_roll_deg;
    case Param::MirrorCubePitch: return snap.alignment.mirrorcube_to_instr_pitch_deg;
    case Param::EwRefAngle: return snap.alignment.ew_ref_angle_deg;
    case Param::NsRefAngle: return snap.alignment.ns_ref_angle_deg;
    case Param::AttitudeRoll: return snap.attitude.roll_deg;
    case Param::AttitudePitch: return snap.attitude.pitch_deg;
    case Param::AttitudeYaw: return snap.attitude.yaw_deg;
  }
  return 0.0;
}

void set_param(GeometrySnapshot& snap, Param p, double v) {
  switch (p) {
    case Param::MirrorCubeRoll: snap.alignment.mirrorcube_to_instr_roll_deg = v; break;
    case Param::MirrorCubePitch: snap.alignment.mirrorcube_to_instr_pitch_deg = v; break;
    case Param::EwRefAngle: snap.alignment.ew_ref_angle_deg = v; break;
    case Param::NsRefAngle: snap.alignment.ns_ref_angle_deg = v; break;
    case Param::AttitudeRoll: snap.attitude.roll_deg = v; break;
    case Param::AttitudePitch: snap.attitude.pitch_deg = v; break;
    case Param::AttitudeYaw: snap.attitude.yaw_deg = v; break;
  }
}

void ParamSelection::validate() const {
  if (params.empty()) throw ConfigurationError("parameter selection is empty");
  std::set<Param> seen(params.begin(), params.end());
  if (seen.size() != params.size()) throw ConfigurationError("duplicate parameter in selection");
}

Correspondence Correspondence::relative(double row, double col,
                                        const geomodel::FrameGeometry& reference, double ref_row,
                                        double ref_col, const projection::ElevationSource& elev,
                                        double weight) {
  return {row, col, reference.geolocate(ref_row, ref_col, elev), weight};
}

namespace {

void check_problem(const ResectionProblem& pb) {
  pb.selection.validate();
  if (pb.points.empty()) throw DomainError("resection needs at least one correspondence");
  for (const auto& c : pb.points)
    if (!(c.weight > 0.0) || !std::isfinite(c.weight))
      throw DomainError("correspondence weight must be finite and > 0");
}

GeometrySnapshot with_params(const ResectionProblem& pb, const VectorXd& params) {
  GeometrySnapshot s = pb.snapshot;
  for (std::size_t k = 0; k < pb.selection.params.size(); ++k)
    set_param(s, pb.selection.params[k], params(static_cast<Eigen::Index>(k)));
  return s;
}

// Model-projected LCC position of every frame pixel (scaled); `ok` marks
// points whose line of sight hits the Earth.
VectorXd model_vector(const VectorXd& params, const ResectionProblem& pb, const projection::Lcc& lcc,
                      std::vector<char>& ok) {
  const geomodel::FrameGeometry geom(with_params(pb, params), pb.consts);
  VectorXd f = VectorXd::Zero(2 * static_cast<Eigen::Index>(pb.points.size()));
  ok.assign(pb.points.size(), 0);
  for (std::size_t i = 0; i < pb.points.size(); ++i) {
    const auto& c = pb.points[i];
    try {
      const auto m = lcc.forward(geom.geolocate(c.row, c.col, pb.elevation));
      const double w = std::sqrt(c.weight);
      f(2 * i) = w * m.x;
      f(2 * i + 1) = w * m.y;
      ok[i] = 1;
    } catch (const MissesEarth&) {
    }
  }
  return f;
}

VectorXd target_vector(const ResectionProblem& pb, const projection::Lcc& lcc) {
  VectorXd y(2 * static_cast<Eigen::Index>(pb.points.size()));
  for (std::size_t i = 0; i < pb.points.size(); ++i) {
    const auto m = lcc.forward(pb.points[i].target);
    const double w = std::sqrt(pb.points[i].weight);
    y(2 * i) = w * m.x;
    y(2 * i + 1) = w * m.y;
  }
  return y;
}

// Solver residual: a trial that loses points off the Earth disc is rejected
// (infinite cost) instead of scoring their dropped residuals as zero.
VectorXd guarded_residuals(const VectorXd& x, const ResectionProblem& pb, int baseline) {
  int bad = 0;
  VectorXd r = residuals(x, pb, &bad);
  if (bad > baseline) r.setConstant(std::numeric_limits<double>::infinity());
  return r;
}

double rms_per_point(const VectorXd& r) {
  const auto n = r.size() / 2;
  return n > 0 ? std::sqrt(r.squaredNorm() / static_cast<double>(n)) : 0.0;
}

}  // namespace

VectorXd initial_params(const ResectionProblem& pb) {
  VectorXd x(static_cast<Eigen::Index>(pb.selection.params.size()));
  for (std::size_t k = 0; k < pb.selection.params.size(); ++k)
    x(static_cast<Eigen::Index>(k)) = get_param(pb.snapshot, pb.selection.params[k]);
  return x;
}

VectorXd residuals(const VectorXd& params, const ResectionProblem& pb, int* excluded) {
  check_problem(pb);
  const projection::Lcc lcc(pb.lcc);
  std::vector<char> ok;
  const VectorXd f = model_vector(params, pb, lcc, ok);
  VectorXd r = target_vector(pb, lcc) - f;
  int bad = 0;
  for (std::size_t i = 0; i < ok.size(); ++i)
    if (!ok[i]) {
      r.segment<2>(2 * static_cast<Eigen::Index>(i)).setZero();
      ++bad;
    }
  if (excluded) *excluded = bad;
  return r;
}

MatrixXd jacobian_fd(const VectorXd& params, const ResectionProblem& pb, double step_deg) {
  check_problem(pb);
  if (!(step_deg > 0.0)) throw DomainError("finite-difference step must be > 0");
  const projection::Lcc lcc(pb.lcc);
  MatrixXd jac(2 * static_cast<Eigen::Index>(pb.points.size()), params.size());
  std::vector<char> ok_p, ok_m;
  for (Eigen::Index k = 0; k < params.size(); ++k) {
    VectorXd xp = params, xm = params;
    xp(k) += step_deg;
    xm(k) -= step_deg;
    const VectorXd fp = model_vector(xp, pb, lcc, ok_p);
    const VectorXd fm = model_vector(xm, pb, lcc, ok_m);
    jac.col(k) = (fp - fm) / (2.0 * step_deg);
    for (std::size_t i = 0; i < ok_p.size(); ++i)
      if (!ok_p[i] || !ok_m[i]) jac.block(2 * static_cast<Eigen::Index>(i), k, 2, 1).setZero();
  }
  return jac;
}

VectorXd solve_update(const MatrixXd& jac, const VectorXd& r, double damping) {
  if (jac.rows() != r.size()) throw DomainError("solve_update: dimension mismatch");
  if (damping < 0.0) throw DomainError("solve_update: damping must be >= 0");
  MatrixXd n = jac.transpose() * jac;
  n.diagonal().array() += damping;
  const Eigen::LDLT<MatrixXd> ldlt(n);
  const double scale = std::max(n.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  const auto d = ldlt.vectorD().cwiseAbs();
  if (ldlt.info() != Eigen::Success || d.minCoeff() <= 1e-13 * scale)
    throw SingularNormalEquations("normal equations are singular");
  VectorXd delta = ldlt.solve(jac.transpose() * r);
  if (!delta.allFinite()) throw SingularNormalEquations("normal equations are singular");
  return delta;
}

SolverResult gauss_newton(const ResidualFn& residual, const JacobianFn& jacobian, VectorXd x,
                          const SolverOptions& opt) {
  SolverResult out;
  VectorXd r = residual(x);
  double cost = r.squaredNorm();
  out.initial_cost = cost;
  MatrixXd jac = jacobian(x);
  double lambda = 0.0;
  auto grow = [&] {
    const double base = std::max((jac.transpose() * jac).diagonal().maxCoeff(), 1e-12);
    lambda = lambda == 0.0 ? 1e-4 * base : lambda * 10.0;
  };

  const int max_attempts = 10 * opt.max_iterations + 10;
  for (int attempt = 0; attempt < max_attempts && out.iterations < opt.max_iterations; ++attempt) {
    VectorXd delta;
    try {
      delta = solve_update(jac, r, lambda);
    } catch (const SingularNormalEquations&) {
      if (lambda > 1e30) break;
      grow();
      continue;
    }
    ++out.iterations;
    const VectorXd xn = x + delta;
    const VectorXd rn = residual(xn);
    const double cn = rn.squaredNorm();
    const bool small = delta.norm() < opt.step_tolerance;
    if (std::isfinite(cn) && cn <= cost) {
      x = xn;
      r = rn;
      cost = cn;
      lambda *= 0.5;
      if (small) {
        out.converged = true;
        break;
      }
      jac = jacobian(x);
    } else {
      if (small) {
        out.converged = true;
        break;
      }
      grow();
    }
  }
  out.params = x;
  out.final_cost = cost;
  return out;
}

ResectionResult resect(const ResectionProblem& pb, const SolverOptions& opt) {
  check_problem(pb);
  const std::size_t need = (pb.selection.params.size() + 1) / 2;
  if (pb.points.size() < need) throw DomainError("too few correspondences for the selection");

  const VectorXd x0 = initial_params(pb);
  ResectionResult out;
  out.params = pb.selection.params;
  out.initial_values = x0;
  const VectorXd r0 = residuals(x0, pb, &out.excluded);
  out.initial_rms_m = rms_per_point(r0);

  const int baseline = out.excluded;
  const SolverResult s = gauss_newton([&](const VectorXd& x) { return guarded_residuals(x, pb, baseline); },
                                      [&](const VectorXd& x) { return jacobian_fd(x, pb, opt.fd_step); },
                                      x0, opt);
  out.values = s.params;
  out.iterations = s.iterations;
  out.converged = s.converged;
  out.snapshot = with_params(pb, s.params);
  out.final_rms_m = rms_per_point(residuals(s.params, pb, &out.excluded));
  return out;
}

CalibrationResult calibrate_alignment(const std::vector<FrameObservations>& frames,
                                      const geomodel::CameraConstants& consts,
                                      const projection::LccParams& lcc,
                                      const projection::ElevationSource& elev,
                                      const SolverOptions& opt) {
  std::size_t with_points = 0;
  for (const auto& f : frames)
    if (!f.points.empty()) ++with_points;
  if (with_points < 3) throw DomainError("calibration needs GCPs on at least 3 frames");

  std::vector<ResectionProblem> problems;
  for (const auto& f : frames) {
    if (f.points.empty()) continue;
    ResectionProblem pb;
    pb.snapshot = f.snapshot;
    pb.consts = consts;
    pb.lcc = lcc;
    pb.elevation = elev;
    pb.points = f.points;
    pb.selection.params = {Param::EwRefAngle, Param::NsRefAngle};
    problems.push_back(std::move(pb));
  }
  Eigen::Index rows = 0;
  for (const auto& pb : problems) rows += 2 * static_cast<Eigen::Index>(pb.points.size());

  std::vector<int> baseline(problems.size(), std::numeric_limits<int>::max());
  auto stack_r = [&](const VectorXd& x) {
    VectorXd r(rows);
    Eigen::Index at = 0;
    for (std::size_t k = 0; k < problems.size(); ++k) {
      const auto& pb = problems[k];
      const VectorXd ri = guarded_residuals(x, pb, baseline[k]);
      r.segment(at, ri.size()) = ri;
      at += ri.size();
    }
    return r;
  };
  auto stack_j = [&](const VectorXd& x) {
    MatrixXd j(rows, 2);
    Eigen::Index at = 0;
    for (const auto& pb : problems) {
      const MatrixXd ji = jacobian_fd(x, pb, opt.fd_step);
      j.middleRows(at, ji.rows()) = ji;
      at += ji.rows();
    }
    return j;
  };
  auto max_err = [](const VectorXd& r) {
    double m = 0.0;
    for (Eigen::Index i = 0; i + 1 < r.size(); i += 2) m = std::max(m, std::hypot(r(i), r(i + 1)));
    return m;
  };

  CalibrationResult out;
  VectorXd x0(2);
  x0 << problems.front().snapshot.alignment.ew_ref_angle_deg,
      problems.front().snapshot.alignment.ns_ref_angle_deg;
  out.ew_ref_before_deg = x0(0);
  out.ns_ref_before_deg = x0(1);
  for (std::size_t k = 0; k < problems.size(); ++k) residuals(x0, problems[k], &baseline[k]);
  const VectorXd r0 = stack_r(x0);
  out.rms_before_m = rms_per_point(r0);
  out.max_before_m = max_err(r0);

  const SolverResult s = gauss_newton(stack_r, stack_j, x0, opt);
  out.ew_ref_deg = s.params(0);
  out.ns_ref_deg = s.params(1);
  const VectorXd r1 = stack_r(s.params);
  out.rms_after_m = rms_per_point(r1);
  out.max_after_m = max_err(r1);
  out.iterations = s.iterations;
  out.converged = s.converged;
  return out;
}

}  // namespace ghrc::resection
