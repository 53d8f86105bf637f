// Copyright (c) barrier-blo contributors
#pragma once

#include <Eigen/Core>

#include "barrier_blo/errors.hpp"
#include "barrier_blo/iterate.hpp"

namespace bblo {

/// Oracle interface a bilevel problem instance must supply.
///
/// f is the upper-level objective, g the lower-level one. The stationarity
/// barrier h(z) = ||grad_y g(z)||^2 and its gradient are derived from these
/// oracles by evaluate(); problems never compute h themselves.
///
/// vjp_grad_y_g(z, v) returns J^T v where J is the m x (n+m) Jacobian of
/// z -> grad_y g(z), i.e. J = [d(grad_y g)/dx  d(grad_y g)/dy]. It must be
/// linear in v.
///
/// Oracles must be side-effect-free; a single solver run calls them
/// sequentially, but several runs may share one instance concurrently.
class BilevelProblem {
 public:
  virtual ~BilevelProblem() = default;

  virtual Dims dims() const = 0;

  virtual double eval_f(const Iterate& z) const = 0;
  virtual Eigen::VectorXd grad_f(const Iterate& z) const = 0;

  virtual double eval_g(const Iterate& z) const = 0;
  virtual Eigen::VectorXd grad_y_g(const Iterate& z) const = 0;
  virtual Eigen::VectorXd vjp_grad_y_g(const Iterate& z, const Eigen::VectorXd& v) const = 0;

  /// Optional Hessian-vector product v -> d^2g/dy^2 * v, used by the
  /// hypergradient diagnostics.
  virtual bool has_hvp_yy() const { return false; }
  virtual Eigen::VectorXd hvp_yy(const Iterate&, const Eigen::VectorXd&) const {
    throw Error("hvp_yy: not provided by this problem");
  }

  /// Optional exact solve with d^2g/dy^2 (e.g. via a factorization), used as
  /// the fast path of the hypergradient diagnostics.
  virtual bool has_exact_yy_solve() const { return false; }
  virtual Eigen::VectorXd solve_yy(const Iterate&, const Eigen::VectorXd&) const {
    throw Error("solve_yy: not provided by this problem");
  }
};

/// Cheap per-point sample: everything a line-search candidate needs
/// (objective value and the barrier value via grad_y g).
struct PointSample {
  Iterate z;
  double f = 0.0;
  Eigen::VectorXd grad_y_g;
  double h = 0.0;
};

/// Immutable snapshot of all first-order quantities at one iterate.
/// Invariants (guaranteed by evaluate): h = ||grad_y_g||^2 and
/// grad_h = 2 * J^T grad_y_g; all entries finite.
struct ProblemEval {
  Iterate z;
  double f = 0.0;
  Eigen::VectorXd grad_f;
  Eigen::VectorXd grad_y_g;
  double h = 0.0;
  Eigen::VectorXd grad_h;
};

/// Evaluates f, grad_y g and h at z. Throws NonFiniteEvaluation on NaN/Inf.
PointSample sample_point(const BilevelProblem& problem, Iterate z);

/// Completes a sample into a full evaluation (adds grad_f and grad_h).
ProblemEval complete_sample(const BilevelProblem& problem, PointSample sample);

/// Full evaluation at z; equivalent to complete_sample(sample_point(...)).
ProblemEval evaluate(const BilevelProblem& problem, const Iterate& z);

/// Flags a regularity violation: h above tol while grad_h is (relatively)
/// zero, contradicting "grad_h = 0 iff h = 0". Purely diagnostic.
bool check_regularity(const ProblemEval& eval, double tol);

}  // namespace bblo
