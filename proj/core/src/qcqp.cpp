// Copyright (c) barrier-blo contributors
#include "barrier_blo/qcqp.hpp"

#include <algorithm>
#include <cmath>

namespace bblo {

void QcqpParams::validate() const {
  if (!(w > 0.0)) throw ConfigError("w", "tilting parameter must be > 0");
  if (!(alpha_b > 0.0)) throw ConfigError("alpha_b", "barrier parameter must be > 0");
  if (!(eps > 0.0)) throw ConfigError("eps", "tolerance must be > 0");
}

double qcqp_scale(const ProblemEval& eval, const QcqpParams& params) {
  const double slack = eval.h - params.eps * params.eps;
  return std::max({1.0, eval.grad_f.squaredNorm(), eval.grad_h.squaredNorm(), std::abs(slack)});
}

namespace {

struct BallGeometry {
  Eigen::VectorXd center;
  double radius = 0.0;
  Eigen::VectorXd to_target;  // -grad_f - center
  double dist = 0.0;
  bool interior = false;
};

BallGeometry ball_geometry(const ProblemEval& eval, const QcqpParams& params) {
  const double eps2 = params.eps * params.eps;
  const double slack = eval.h - eps2;
  if (eval.h == eps2 && eval.grad_h.norm() == 0.0) {
    throw DegenerateGradient(
        "solve_direction: grad_h = 0 on the constraint boundary (regularity violated)");
  }
  BallGeometry geo;
  geo.center = -eval.grad_h / (2.0 * params.w);
  double r2 = geo.center.squaredNorm() - (params.alpha_b / params.w) * slack;
  if (r2 < 0.0) {
    // Round-off at the boundary must not abort a valid run; anything worse
    // means the iterate left the sublevel set where the subproblem is
    // guaranteed feasible.
    if (r2 >= -1e-12 * qcqp_scale(eval, params)) {
      r2 = 0.0;
    } else {
      throw InfeasibleSubproblem("solve_direction: empty constraint ball (r^2 < 0)");
    }
  }
  geo.radius = std::sqrt(r2);
  geo.to_target = -eval.grad_f - geo.center;
  geo.dist = geo.to_target.norm();
  geo.interior = geo.dist <= geo.radius;
  return geo;
}

}  // namespace

QcqpSolution solve_direction(const ProblemEval& eval, const QcqpParams& params) {
  params.validate();
  const BallGeometry geo = ball_geometry(eval, params);

  QcqpSolution sol;
  sol.center = geo.center;
  sol.radius = geo.radius;
  if (geo.interior) {
    sol.branch = QcqpBranch::kInterior;
    sol.delta_z = -eval.grad_f;
  } else {
    sol.branch = QcqpBranch::kBoundaryProjection;
    sol.delta_z = geo.center + (geo.radius / geo.dist) * geo.to_target;
  }
  try {
    sol.lambda = recover_dual(eval, params, sol.delta_z);
  } catch (const DegenerateDual&) {
    // Zero-radius corner (only reachable through the round-off clamp): the
    // multiplier has no finite KKT value there; report 0 so the residual
    // diagnostics surface the non-stationarity instead of aborting.
    sol.lambda = 0.0;
  }
  const double slack = eval.h - params.eps * params.eps;
  sol.constraint_residual =
      eval.grad_h.dot(sol.delta_z) + params.alpha_b * slack + params.w * sol.delta_z.squaredNorm();
  return sol;
}

double recover_dual(const ProblemEval& eval, const QcqpParams& params,
                    const Eigen::VectorXd& delta_z) {
  params.validate();
  const BallGeometry geo = ball_geometry(eval, params);
  if (geo.interior) {
    return 0.0;
  }
  const Eigen::VectorXd u = eval.grad_h + 2.0 * params.w * delta_z;
  const double denom = u.squaredNorm();
  if (denom == 0.0) {
    throw DegenerateDual("recover_dual: grad_h + 2 w dz = 0 on the boundary branch");
  }
  const double lambda = -(delta_z + eval.grad_f).dot(u) / denom;
  return std::max(0.0, lambda);
}

}  // namespace bblo
