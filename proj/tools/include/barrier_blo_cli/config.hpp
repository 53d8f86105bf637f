// Copyright (c) barrier-blo contributors
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <barrier_blo/problems.hpp>
#include <barrier_blo/solver.hpp>

namespace bblo::cli {

/// Typed experiment configuration, parsed from a flat key-value text file
/// ("key = value" lines, '#' comments). Unknown keys and out-of-range values
/// are rejected with field-level ConfigError messages.
struct ExperimentConfig {
  // problem selection
  std::string problem = "synthetic";  // synthetic | quadratic | dhc
  int dim = 20;                       // synthetic/quadratic: n = m = dim
  DhcSpec dhc{};                      // dhc parameters (seed filled per run)

  // solver
  SolverConfig solver{};

  // runs
  std::vector<std::uint64_t> seeds = {0};
  std::string out_dir = "out";

  // feasibility initialization
  bool init = true;
  double init_margin = 0.1;
  int init_budget = 5000;
  double z0_scale = 1.0;

  // ablation grid over the tilting parameter
  std::vector<double> ablation_w = {1e-1, 1e-2, 1e-3};

  // comparison / diagnostics
  std::string compare_mode = "both";  // both | baseline-only
  int aid_inner_steps = 100;
  int aid_outer_steps = 200;
  double hypergrad_tol = 1e-10;
  int gradcheck_points = 100;

  static ExperimentConfig load(const std::string& path);
  static ExperimentConfig parse(const std::string& text);

  void validate() const;
};

}  // namespace bblo::cli
