// Copyright (c) barrier-blo contributors
#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace bblo {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A problem oracle returned NaN/Inf (problem-definition bug or divergence).
class NonFiniteEvaluation : public Error {
 public:
  using Error::Error;
};

/// The direction subproblem has an empty feasible set (r^2 < 0 beyond
/// round-off); only reachable from an infeasible iterate.
class InfeasibleSubproblem : public Error {
 public:
  using Error::Error;
};

/// The iterate sits exactly on the constraint boundary with a vanishing
/// barrier gradient; the regularity assumption fails there.
class DegenerateGradient : public Error {
 public:
  using Error::Error;
};

/// Dual recovery hit a vanishing denominator on the boundary branch
/// (violated constraint qualification).
class DegenerateDual : public Error {
 public:
  using Error::Error;
};

/// The backtracking search exhausted its budget. Carries the residuals of
/// both conditions at the last tested step so the failure is diagnosable.
class MaxBacktracksExceeded : public Error {
 public:
  MaxBacktracksExceeded(const std::string& msg, double last_t,
                        double armijo_lhs, double armijo_rhs,
                        double safety_lhs, double safety_rhs)
      : Error(msg),
        last_t_(last_t),
        armijo_lhs_(armijo_lhs),
        armijo_rhs_(armijo_rhs),
        safety_lhs_(safety_lhs),
        safety_rhs_(safety_rhs) {}

  double last_t() const { return last_t_; }
  double armijo_lhs() const { return armijo_lhs_; }
  double armijo_rhs() const { return armijo_rhs_; }
  double safety_lhs() const { return safety_lhs_; }
  double safety_rhs() const { return safety_rhs_; }

 private:
  double last_t_;
  double armijo_lhs_;
  double armijo_rhs_;
  double safety_lhs_;
  double safety_rhs_;
};

/// Feasibility initialization ran out of descent steps before reaching its
/// target sublevel set.
class InitBudgetExhausted : public Error {
 public:
  using Error::Error;
};

/// The dual bisection oracle could not bracket a root.
class BracketFailure : public Error {
 public:
  using Error::Error;
};

/// Conjugate gradient detected non-positive curvature.
class IndefiniteHessian : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value; carries the offending field name.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& msg)
      : Error(field + ": " + msg), field_(std::move(field)) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Malformed IDX file (bad magic, truncated payload, header mismatch).
class IdxFormatError : public Error {
 public:
  using Error::Error;
};

/// Filesystem-level failure.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace bblo
