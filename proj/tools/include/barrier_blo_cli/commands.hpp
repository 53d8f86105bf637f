// Copyright (c) barrier-blo contributors
#pragma once

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <barrier_blo/oracles.hpp>
#include <barrier_blo/solver.hpp>

#include "barrier_blo_cli/config.hpp"
#include "barrier_blo_cli/trace_io.hpp"

namespace bblo::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailure = 1;
inline constexpr int kExitInfeasibleStart = 2;
inline constexpr int kExitLineSearchFailure = 3;
inline constexpr int kExitConfigError = 4;

struct RunOptions {
  std::string out_override;  // --out; BARRIER_BLO_OUT wins over both
  int jobs = 1;
  std::optional<std::uint64_t> seed_override;
  std::ostream* err = &std::cerr;
  std::ostream* out = &std::cout;
};

/// Output directory, resolved env > --out > config.
std::filesystem::path resolve_out_dir(const ExperimentConfig& cfg, const RunOptions& opts);

std::unique_ptr<BilevelProblem> build_problem(const ExperimentConfig& cfg, std::uint64_t seed);

/// Deterministic start point for a run: scaled Gaussian for synthetic and
/// quadratic instances, zeros for dhc.
Iterate draw_start_point(const ExperimentConfig& cfg, const BilevelProblem& problem,
                         std::uint64_t seed);

struct RunResult {
  SolveReport report;
  std::vector<TraceRow> rows;  // trace with the hypergradient column filled
};

/// One solver run with the tilting parameter overridden to `w`, observing
/// every iteration to fill the hypergradient trace column. `extra` is chained
/// after the internal observer (used by the acceptance suite).
RunResult run_single(const ExperimentConfig& cfg, double w, std::uint64_t seed,
                     const IterationObserver& extra = {});

struct GradCheckResult {
  double worst_grad_f = 0.0;
  double worst_grad_y_g = 0.0;
  double worst_grad_h = 0.0;

  double worst() const;
};

inline constexpr double kGradCheckTol = 1e-5;

/// Central-difference agreement of the three analytic oracles at `points`
/// random points.
GradCheckResult gradcheck_problem(const BilevelProblem& problem, int points,
                                  std::uint64_t seed);

int cmd_solve(const ExperimentConfig& cfg, const RunOptions& opts);
int cmd_ablate(const ExperimentConfig& cfg, const RunOptions& opts);
int cmd_gradcheck(const ExperimentConfig& cfg, const RunOptions& opts);
int cmd_qcqp_selftest(long long count, std::uint64_t seed, std::ostream& out = std::cout);
int cmd_compare(const ExperimentConfig& cfg, const RunOptions& opts);

}  // namespace bblo::cli
