// Copyright (c) barrier-blo contributors
#pragma once

#include <span>

#include <Eigen/Core>

#include "barrier_blo/problem.hpp"

namespace bblo {

struct LineSearchConfig {
  double alpha_ls = 0.1;   // sufficient-decrease parameter, in (0,1)
  double gamma = 0.1;      // barrier decay parameter, in (0,1)
  double beta = 0.5;       // backtracking factor, in (0,1)
  double t_max = 1.0;      // first candidate step, > 0
  int max_backtracks = 60; // t underflows double precision beyond this

  void validate() const;
};

/// Accepted step and the recorded values of both acceptance tests, so every
/// accepted step can be re-checked from the record alone. `accepted` holds
/// the sample at z + t dz for reuse as the next iterate's evaluation.
struct LineSearchResult {
  double t = 0.0;
  int backtracks = 0;
  PointSample accepted;
  double armijo_lhs = 0.0;  // f(z + t dz)
  double armijo_rhs = 0.0;  // f(z) + alpha_ls t grad_f' dz
  double safety_lhs = 0.0;  // h(z + t dz) - eps^2
  double safety_rhs = 0.0;  // (1 - gamma)(h(z) - eps^2)

  double f_new() const { return accepted.f; }
  double h_new() const { return accepted.h; }
};

/// Backtracks from t_max by factors of beta until the largest step satisfying
/// BOTH conditions is found:
///
///   sufficient decrease   f(z + t dz) <= f(z) + alpha_ls t grad_f' dz
///   barrier decay         h(z + t dz) - eps^2 <= (1 - gamma)(h(z) - eps^2)
///
/// The decay condition is the discrete analog of the continuous barrier
/// condition grad_h' dz/dt + alpha_b (h - eps^2) <= 0 under gamma = alpha_b t,
/// and it keeps the sublevel set invariant: a feasible z stays feasible.
///
/// Comparisons carry an absolute slack of 1e-14 * max(1, |f(z)|) and
/// 1e-14 * max(1, |h(z) - eps^2|) respectively so exact-equality candidates
/// (e.g. dz = 0) do not spuriously backtrack. Throws MaxBacktracksExceeded
/// with the last tested residuals when the budget runs out.
LineSearchResult backtrack(const BilevelProblem& problem, const ProblemEval& eval,
                           const Eigen::VectorXd& delta_z, const LineSearchConfig& cfg,
                           double eps);

/// True iff the recorded barrier values satisfy the geometric decay chain
/// h_k - eps^2 <= (1 - gamma)^k (h_0 - eps^2) + 1e-12 for every k.
bool check_safety_chain(std::span<const double> h_values, double eps, double gamma);

}  // namespace bblo
