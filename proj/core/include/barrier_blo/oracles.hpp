// Copyright (c) barrier-blo contributors
#pragma once

#include <functional>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "barrier_blo/problem.hpp"
#include "barrier_blo/qcqp.hpp"

namespace bblo {

/// Central finite differences; the step default is tuned for unit-scaled
/// double-precision inputs.
struct FdConfig {
  double step = 1e-5;
};

/// Central-difference gradient of a scalar field, component i
/// (fun(z + step e_i) - fun(z - step e_i)) / (2 step).
Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& fun,
                            const Eigen::VectorXd& z, const FdConfig& cfg = {});

/// Independent reference solver for the direction subproblem: parameterizes
/// the KKT stationarity condition as dz(lambda) = -(grad_f + lambda grad_h)
/// / (1 + 2 lambda w) and locates the multiplier by bracket expansion plus
/// bisection on the constraint residual
///   psi(lambda) = grad_h' dz + alpha_b (h - eps^2) + w ||dz||^2.
/// Deliberately shares no branch logic with the closed form. Throws
/// BracketFailure when psi stays positive up to lambda = 1e12.
QcqpSolution qcqp_oracle(const ProblemEval& eval, const QcqpParams& params, double tol);

enum class HypergradMethod {
  kExactSolve,         // problem-supplied solve with d^2g/dy^2
  kConjugateGradient,  // matrix-free CG on hvp_yy
};

struct HypergradEstimate {
  Eigen::VectorXd F;  // length n
  HypergradMethod method = HypergradMethod::kConjugateGradient;
  double inner_residual = 0.0;
};

/// Implicit-function hypergradient at the current iterate:
///   F = grad_x f - (d^2g/dydx)' v  with  (d^2g/dy^2) v = grad_y f.
/// The inner system is solved by CG until the residual falls to
/// tol * max(1, ||grad_y f||), or by the problem's exact solve when
/// requested and available. CG throws IndefiniteHessian on non-positive
/// curvature.
HypergradEstimate exact_hypergradient(const BilevelProblem& problem, const Iterate& z,
                                      double tol,
                                      HypergradMethod method = HypergradMethod::kConjugateGradient);

/// Classic double-loop approximate-implicit-differentiation baseline:
/// inner gradient descent on y, CG inverse-Hessian-vector product, outer
/// backtracked gradient step on x. Diagnostic only.
struct AidConfig {
  int inner_steps = 100;
  int outer_steps = 200;
  double cg_tol = 1e-10;
  double inner_tol = 1e-12;     // stop inner loop when ||grad_y g|| falls below
  double armijo_alpha = 1e-4;
  double beta = 0.5;
  int max_backtracks = 30;
};

struct AidMetrics {
  double hypergrad_norm = 0.0;        // ||F||
  double lower_level_residual = 0.0;  // ||grad_y g||
};

/// Runs the baseline from z0 = (x0, y0) and returns one metrics entry per
/// outer round: the first entry reflects the start point after the initial
/// inner refinement, then one per outer step (length outer_steps + 1).
std::vector<AidMetrics> aid_baseline(const BilevelProblem& problem, const Iterate& z0,
                                     const AidConfig& cfg);

/// Random feasible instances of the direction subproblem for the
/// closed-form-vs-oracle self test.
struct QcqpInstanceOptions {
  int min_dim = 2;
  int max_dim = 50;
  double delta_min = -1.0;  // sampled h - eps^2 range (eps fixed so h >= 0)
  double delta_max = 0.0;
  double boundary_fraction = 0.125;  // fraction pinned exactly at h = eps^2
};

struct QcqpInstance {
  ProblemEval eval;
  QcqpParams params;
};

QcqpInstance random_feasible_instance(std::mt19937_64& rng,
                                      const QcqpInstanceOptions& opts = {});

}  // namespace bblo
