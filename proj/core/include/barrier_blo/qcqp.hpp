// Copyright (c) barrier-blo contributors
#pragma once

#include <Eigen/Core>

#include "barrier_blo/problem.hpp"

namespace bblo {

/// Parameters of the direction subproblem
///
///   min_dz  1/2 ||dz + grad_f||^2
///   s.t.    grad_h' dz + alpha_b (h - eps^2) <= -w ||dz||^2.
///
/// The quadratic tilt w > 0 turns the linearized barrier constraint into a
/// ball constraint and keeps boundary directions strictly inward-pointing.
struct QcqpParams {
  double w = 0.01;       // tilting parameter, > 0
  double alpha_b = 0.1;  // barrier parameter, > 0
  double eps = 0.1;      // sublevel tolerance, > 0

  void validate() const;
};

enum class QcqpBranch {
  kInterior,            // -grad_f already satisfies the constraint
  kBoundaryProjection,  // -grad_f projected onto the ball surface
};

/// Direction, dual multiplier and the geometry of the equivalent
/// ball-projection problem: the constraint is
/// ||dz - center||^2 <= radius^2 with center = -grad_h / (2w).
struct QcqpSolution {
  Eigen::VectorXd delta_z;
  double lambda = 0.0;  // dual of the tilted constraint, >= 0
  QcqpBranch branch = QcqpBranch::kInterior;
  Eigen::VectorXd center;
  double radius = 0.0;
  // grad_h' dz + alpha_b (h - eps^2) + w ||dz||^2 at the solution; <= 0 up
  // to round-off.
  double constraint_residual = 0.0;
};

/// Scale used to make the exact inequalities of the subproblem assertable in
/// floating point: max(1, ||grad_f||^2, ||grad_h||^2, |h - eps^2|).
double qcqp_scale(const ProblemEval& eval, const QcqpParams& params);

/// Closed-form solution of the direction subproblem: the projection of
/// -grad_f onto the ball. Throws InfeasibleSubproblem when the ball is empty
/// beyond round-off (r^2 < -1e-12 * scale) and DegenerateGradient when the
/// iterate sits exactly on the boundary with grad_h = 0.
QcqpSolution solve_direction(const ProblemEval& eval, const QcqpParams& params);

/// Recovers the dual multiplier from the stationarity condition
/// (1 + 2 lambda w) dz + grad_f + lambda grad_h = 0 by least squares,
/// clamped to lambda >= 0. Zero on the interior branch.
double recover_dual(const ProblemEval& eval, const QcqpParams& params,
                    const Eigen::VectorXd& delta_z);

}  // namespace bblo
