// Copyright (c) barrier-blo contributors
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "barrier_blo/line_search.hpp"
#include "barrier_blo/qcqp.hpp"

namespace bblo {

struct SolverConfig {
  double eps = 0.1;    // feasibility tolerance; authoritative over qcqp.eps
  QcqpParams qcqp{};   // w, alpha_b (qcqp.eps is overridden by eps above)
  LineSearchConfig ls{};
  int max_iter = 2000;
  double tol_dz = 1e-8;  // stop when ||dz|| falls to this
  std::uint64_t seed = 0;
  int record_every = 1;

  void validate() const;
};

enum class SolveStatus {
  kStationary,
  kMaxIter,
  kLineSearchFailure,
  kInfeasibleStart,
};

const char* to_string(SolveStatus status);

/// One row of the solver trace, describing the state at iterate z^k and the
/// step taken from it. Terminal snapshot rows carry t = 0, backtracks = 0.
struct IterationRecord {
  int k = 0;
  double f = 0.0;
  double h_minus_eps2 = 0.0;
  double norm_dz = 0.0;
  double t = 0.0;
  double lambda = 0.0;
  int backtracks = 0;
  double kkt_residual = 0.0;
  double wall_time_ms = 0.0;
};

/// Scalarized approximate-KKT residuals of the relaxed problem
///   min f(z)  s.t.  h(z) - eps^2 <= 0
/// at an iterate with multiplier lambda.
struct KktDiagnostics {
  double stationarity = 0.0;    // ||grad_f + lambda grad_h||
  double feasibility = 0.0;     // [h - eps^2]_+
  double complementarity = 0.0; // lambda |h - eps^2| near the boundary, else lambda
  double eps_tilde = 0.0;       // max of the three clauses
  // Residual pair of the stationarity-constrained formulation
  // (min f s.t. grad_y g = 0) under the dual mapping nu = lambda grad_y_g:
  double stationary_form_residual = 0.0;  // ||grad_f + J' nu|| = ||grad_f + lambda grad_h / 2||
  double lower_level_residual = 0.0;      // ||grad_y g|| = sqrt(h)
};

KktDiagnostics kkt_diagnostics(const ProblemEval& eval, double lambda, double eps);

/// eps_tilde from kkt_diagnostics.
double kkt_residual(const ProblemEval& eval, double lambda, double eps);

struct SolveReport {
  SolveStatus status = SolveStatus::kMaxIter;
  Iterate final_iterate;
  std::vector<IterationRecord> trace;
  // Running averages (1/K) sum_{k<K} ||dz^k||^2 over all accepted steps, one
  // entry per recorded step row; recomputable from the trace exactly when
  // record_every = 1.
  std::vector<double> ergodic_avg;
  // Iterations where check_regularity flagged a vanishing barrier gradient
  // above the sublevel tolerance. Diagnostic only; never aborts a run.
  int regularity_flags = 0;
  SolverConfig config;       // echo
  std::uint64_t seed = 0;    // echo
  std::string message;
};

/// Per-iteration hook: fires once per iteration with the state at z^k, the
/// direction solved there, and the accepted step (null for terminal snapshot
/// rows where no step is taken).
struct IterationEvent {
  int k;
  const ProblemEval& eval;
  const QcqpSolution& direction;
  const KktDiagnostics& kkt;
  const LineSearchResult* line_search;  // nullptr on terminal rows
};
using IterationObserver = std::function<void(const IterationEvent&)>;

/// Runs the sequential direction-then-line-search loop from a feasible start:
/// z^{k+1} = z^k + t^k dz^k until ||dz^k|| <= tol_dz or k = max_iter.
/// A start with h(z0) > eps^2 returns kInfeasibleStart; a failed line search
/// returns kLineSearchFailure with a diagnostic message.
SolveReport solve(const BilevelProblem& problem, const Iterate& z0, const SolverConfig& cfg,
                  const IterationObserver& observer = {});

/// Brings z0 into the margin-shrunken sublevel set h <= (1 - margin) eps^2 by
/// backtracked gradient descent on h. Returns the input unchanged when it
/// already qualifies; throws InitBudgetExhausted when `budget` descent steps
/// are not enough.
Iterate init_feasible(const BilevelProblem& problem, const Iterate& z0, double eps,
                      double margin, int budget);

}  // namespace bblo
