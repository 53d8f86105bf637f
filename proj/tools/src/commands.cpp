// Copyright (c) barrier-blo contributors
#include "barrier_blo_cli/commands.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <thread>

#include <json.hpp>

#include <barrier_blo/problems.hpp>

namespace bblo::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kStartPointSalt = 0x5eed0f0e11aa77ULL;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

json config_echo(const ExperimentConfig& cfg) {
  json j;
  j["problem"] = cfg.problem;
  j["dim"] = cfg.dim;
  j["eps"] = cfg.solver.eps;
  j["w"] = cfg.solver.qcqp.w;
  j["alpha_b"] = cfg.solver.qcqp.alpha_b;
  j["alpha_ls"] = cfg.solver.ls.alpha_ls;
  j["gamma"] = cfg.solver.ls.gamma;
  j["beta"] = cfg.solver.ls.beta;
  j["t_max"] = cfg.solver.ls.t_max;
  j["max_backtracks"] = cfg.solver.ls.max_backtracks;
  j["max_iter"] = cfg.solver.max_iter;
  j["tol_dz"] = cfg.solver.tol_dz;
  j["record_every"] = cfg.solver.record_every;
  j["seeds"] = cfg.seeds;
  j["init"] = cfg.init;
  j["init_margin"] = cfg.init_margin;
  j["init_budget"] = cfg.init_budget;
  j["z0_scale"] = cfg.z0_scale;
  j["ablation_w"] = cfg.ablation_w;
  j["compare_mode"] = cfg.compare_mode;
  j["aid_inner_steps"] = cfg.aid_inner_steps;
  j["aid_outer_steps"] = cfg.aid_outer_steps;
  j["hypergrad_tol"] = cfg.hypergrad_tol;
  j["gradcheck_points"] = cfg.gradcheck_points;
  if (cfg.problem == "dhc") {
    j["num_train"] = cfg.dhc.num_train;
    j["num_val"] = cfg.dhc.num_val;
    j["num_test"] = cfg.dhc.num_test;
    j["feature_dim"] = cfg.dhc.feature_dim;
    j["num_classes"] = cfg.dhc.num_classes;
    j["corruption_rate"] = cfg.dhc.corruption_rate;
    j["reg_coeff"] = cfg.dhc.reg_coeff;
  }
  return j;
}

std::vector<std::uint64_t> effective_seeds(const ExperimentConfig& cfg, const RunOptions& opts) {
  if (opts.seed_override) {
    return {*opts.seed_override};
  }
  return cfg.seeds;
}

double final_sqrt_h(const RunResult& run, double eps) {
  if (run.rows.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::sqrt(std::max(0.0, run.rows.back().h_minus_eps2 + eps * eps));
}

json run_summary(const RunResult& run, std::uint64_t seed, double eps,
                 const std::string& trace_file) {
  json j;
  j["seed"] = seed;
  j["status"] = to_string(run.report.status);
  j["iterations"] = run.rows.empty() ? 0 : run.rows.back().k;
  j["final_f"] = run.rows.empty() ? std::numeric_limits<double>::quiet_NaN() : run.rows.back().f;
  j["final_sqrt_h"] = final_sqrt_h(run, eps);
  j["final_kkt_residual"] =
      run.rows.empty() ? std::numeric_limits<double>::quiet_NaN() : run.rows.back().kkt_residual;
  j["trace_file"] = trace_file;
  if (!run.report.message.empty()) {
    j["message"] = run.report.message;
  }
  return j;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot open '" + path.string() + "'");
  }
  out << j.dump(2) << '\n';
}

/// Runs `task(i)` for i in [0, count) on up to `jobs` threads. Exceptions are
/// rethrown on the calling thread (first index wins).
void parallel_for(int count, int jobs, const std::function<void(int)>& task) {
  jobs = std::max(1, std::min(jobs, count));
  if (jobs == 1) {
    for (int i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  std::vector<std::thread> workers;
  workers.reserve(static_cast<std::size_t>(jobs));
  for (int t = 0; t < jobs; ++t) {
    workers.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        try {
          task(i);
        } catch (...) {
          errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  for (const auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
}

int exit_code_for(const std::vector<RunResult>& runs, const RunOptions& opts) {
  for (const RunResult& run : runs) {
    if (run.report.status == SolveStatus::kInfeasibleStart) {
      *opts.err << "run seed=" << run.report.seed << ": infeasible start ("
                << run.report.message << ")\n";
      return kExitInfeasibleStart;
    }
  }
  for (const RunResult& run : runs) {
    if (run.report.status == SolveStatus::kLineSearchFailure) {
      *opts.err << "run seed=" << run.report.seed << ": line search failure ("
                << run.report.message << ")\n";
      return kExitLineSearchFailure;
    }
  }
  return kExitOk;
}

int first_row_at_or_below(const std::vector<TraceRow>& rows, double threshold,
                          int sentinel) {
  for (const TraceRow& row : rows) {
    if (row.hypergrad_norm <= threshold) {
      return static_cast<int>(row.k);
    }
  }
  return sentinel;
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

}  // namespace

fs::path resolve_out_dir(const ExperimentConfig& cfg, const RunOptions& opts) {
  if (const char* env = std::getenv("BARRIER_BLO_OUT"); env != nullptr && *env != '\0') {
    return fs::path(env);
  }
  if (!opts.out_override.empty()) {
    return fs::path(opts.out_override);
  }
  return fs::path(cfg.out_dir);
}

std::unique_ptr<BilevelProblem> build_problem(const ExperimentConfig& cfg, std::uint64_t seed) {
  if (cfg.problem == "synthetic") {
    return make_synthetic(SyntheticSpec::random(cfg.dim, seed));
  }
  if (cfg.problem == "quadratic") {
    return make_quadratic_testbed(cfg.dim, seed);
  }
  if (cfg.problem == "dhc") {
    DhcSpec spec = cfg.dhc;
    spec.seed = seed;
    return make_dhc(spec);
  }
  throw ConfigError("problem", "unknown problem '" + cfg.problem + "'");
}

Iterate draw_start_point(const ExperimentConfig& cfg, const BilevelProblem& problem,
                         std::uint64_t seed) {
  const Dims dims = problem.dims();
  if (cfg.problem == "dhc") {
    return Iterate::zero(dims.n, dims.m);
  }
  std::mt19937_64 rng(splitmix64(seed ^ kStartPointSalt));
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd data(dims.size());
  for (int i = 0; i < dims.size(); ++i) {
    data(i) = cfg.z0_scale * normal(rng);
  }
  return Iterate(std::move(data), dims.n, dims.m);
}

RunResult run_single(const ExperimentConfig& cfg, double w, std::uint64_t seed,
                     const IterationObserver& extra) {
  const std::unique_ptr<BilevelProblem> problem = build_problem(cfg, seed);

  SolverConfig solver = cfg.solver;
  solver.qcqp.w = w;
  solver.qcqp.eps = solver.eps;
  solver.seed = seed;

  RunResult result;
  Iterate z0 = draw_start_point(cfg, *problem, seed);
  if (cfg.init) {
    try {
      z0 = init_feasible(*problem, z0, solver.eps, cfg.init_margin, cfg.init_budget);
    } catch (const InitBudgetExhausted& e) {
      result.report.status = SolveStatus::kInfeasibleStart;
      result.report.final_iterate = z0;
      result.report.config = solver;
      result.report.seed = seed;
      result.report.message = e.what();
      return result;
    }
  }

  // ||F|| per iteration for the trace column; NaN when unavailable.
  const bool has_hypergrad = problem->has_hvp_yy() || problem->has_exact_yy_solve();
  const HypergradMethod method = problem->has_exact_yy_solve()
                                     ? HypergradMethod::kExactSolve
                                     : HypergradMethod::kConjugateGradient;
  std::vector<double> hypergrad(static_cast<std::size_t>(solver.max_iter) + 2,
                                std::numeric_limits<double>::quiet_NaN());
  const IterationObserver observer = [&](const IterationEvent& ev) {
    if (has_hypergrad && ev.k >= 0 && ev.k < static_cast<int>(hypergrad.size())) {
      try {
        hypergrad[static_cast<std::size_t>(ev.k)] =
            exact_hypergradient(*problem, ev.eval.z, cfg.hypergrad_tol, method).F.norm();
      } catch (const Error&) {
        // leave NaN; the trace column is diagnostic only
      }
    }
    if (extra) {
      extra(ev);
    }
  };

  result.report = solve(*problem, z0, solver, observer);
  result.rows.reserve(result.report.trace.size());
  for (const IterationRecord& rec : result.report.trace) {
    TraceRow row;
    row.k = rec.k;
    row.f = rec.f;
    row.h_minus_eps2 = rec.h_minus_eps2;
    row.norm_dz = rec.norm_dz;
    row.t = rec.t;
    row.lambda = rec.lambda;
    row.backtracks = rec.backtracks;
    row.kkt_residual = rec.kkt_residual;
    row.hypergrad_norm = rec.k < static_cast<int>(hypergrad.size())
                             ? hypergrad[static_cast<std::size_t>(rec.k)]
                             : std::numeric_limits<double>::quiet_NaN();
    row.wall_ms = rec.wall_time_ms;
    result.rows.push_back(row);
  }
  return result;
}

GradCheckResult gradcheck_problem(const BilevelProblem& problem, int points,
                                  std::uint64_t seed) {
  const Dims dims = problem.dims();
  std::mt19937_64 rng(splitmix64(seed ^ 0x6ad0c43cull));
  std::normal_distribution<double> normal(0.0, 1.0);

  const auto rel_err = [](const Eigen::VectorXd& got, const Eigen::VectorXd& want) {
    return (got - want).norm() / std::max(1.0, want.norm());
  };

  GradCheckResult res;
  for (int p = 0; p < points; ++p) {
    Eigen::VectorXd data(dims.size());
    for (int i = 0; i < dims.size(); ++i) data(i) = normal(rng);
    const Iterate z(data, dims.n, dims.m);
    const ProblemEval eval = evaluate(problem, z);

    const Eigen::VectorXd fd_f = fd_gradient(
        [&](const Eigen::VectorXd& v) { return problem.eval_f(Iterate(v, dims.n, dims.m)); },
        data);
    res.worst_grad_f = std::max(res.worst_grad_f, rel_err(eval.grad_f, fd_f));

    const Eigen::VectorXd fd_g = fd_gradient(
        [&](const Eigen::VectorXd& v) { return problem.eval_g(Iterate(v, dims.n, dims.m)); },
        data);
    res.worst_grad_y_g =
        std::max(res.worst_grad_y_g, rel_err(eval.grad_y_g, fd_g.tail(dims.m)));

    const Eigen::VectorXd fd_h = fd_gradient(
        [&](const Eigen::VectorXd& v) {
          return problem.grad_y_g(Iterate(v, dims.n, dims.m)).squaredNorm();
        },
        data);
    res.worst_grad_h = std::max(res.worst_grad_h, rel_err(eval.grad_h, fd_h));
  }
  return res;
}

double GradCheckResult::worst() const {
  return std::max({worst_grad_f, worst_grad_y_g, worst_grad_h});
}

int cmd_solve(const ExperimentConfig& cfg, const RunOptions& opts) {
  const fs::path out_dir = resolve_out_dir(cfg, opts);
  fs::create_directories(out_dir);
  const std::vector<std::uint64_t> seeds = effective_seeds(cfg, opts);

  std::vector<RunResult> runs(seeds.size());
  parallel_for(static_cast<int>(seeds.size()), opts.jobs, [&](int i) {
    runs[static_cast<std::size_t>(i)] =
        run_single(cfg, cfg.solver.qcqp.w, seeds[static_cast<std::size_t>(i)]);
  });

  json summary;
  summary["command"] = "solve";
  summary["config"] = config_echo(cfg);
  summary["runs"] = json::array();
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const std::string trace_file = "trace_seed" + std::to_string(seeds[i]) + ".csv";
    write_trace_csv(out_dir / trace_file, runs[i].rows);
    summary["runs"].push_back(run_summary(runs[i], seeds[i], cfg.solver.eps, trace_file));
  }
  write_json(out_dir / "summary.json", summary);
  return exit_code_for(runs, opts);
}

int cmd_ablate(const ExperimentConfig& cfg, const RunOptions& opts) {
  if (cfg.ablation_w.empty()) {
    throw ConfigError("ablation_w", "ablation grid must be non-empty");
  }
  const fs::path out_dir = resolve_out_dir(cfg, opts);
  fs::create_directories(out_dir);
  const std::vector<std::uint64_t> seeds = effective_seeds(cfg, opts);
  const int sentinel = cfg.solver.max_iter + 1;  // "not reached within the run"

  struct Cell {
    double w = 0.0;
    std::uint64_t seed = 0;
    RunResult run;
  };
  std::vector<Cell> cells(cfg.ablation_w.size() * seeds.size());
  for (std::size_t wi = 0; wi < cfg.ablation_w.size(); ++wi) {
    for (std::size_t si = 0; si < seeds.size(); ++si) {
      Cell& cell = cells[wi * seeds.size() + si];
      cell.w = cfg.ablation_w[wi];
      cell.seed = seeds[si];
    }
  }
  parallel_for(static_cast<int>(cells.size()), opts.jobs, [&](int i) {
    Cell& cell = cells[static_cast<std::size_t>(i)];
    cell.run = run_single(cfg, cell.w, cell.seed);
  });

  const double eps = cfg.solver.eps;
  std::ofstream table(out_dir / "ablation_summary.csv");
  if (!table) throw IoError("cmd_ablate: cannot open summary table");
  table << "w,seed,status,iterations,first_k_boundary,first_k_hypergrad_half,"
           "first_k_hypergrad_tenth,first_k_hypergrad_hundredth\n";

  std::map<double, std::array<std::vector<double>, 4>> stats;
  std::vector<RunResult> flat;
  for (Cell& cell : cells) {
    const std::vector<TraceRow>& rows = cell.run.rows;
    // First recorded iteration with sqrt(h) >= 0.9 eps, i.e.
    // h - eps^2 >= (0.81 - 1) eps^2.
    int first_boundary = sentinel;
    for (const TraceRow& row : rows) {
      if (row.h_minus_eps2 >= -0.19 * eps * eps) {
        first_boundary = static_cast<int>(row.k);
        break;
      }
    }
    const double f0 = rows.empty() ? std::numeric_limits<double>::quiet_NaN()
                                   : rows.front().hypergrad_norm;
    const int k_half = first_row_at_or_below(rows, 0.5 * f0, sentinel);
    const int k_tenth = first_row_at_or_below(rows, 0.1 * f0, sentinel);
    const int k_hundredth = first_row_at_or_below(rows, 0.01 * f0, sentinel);

    const std::string trace_file = "trace_w" + format_double(cell.w) + "_seed" +
                                   std::to_string(cell.seed) + ".csv";
    write_trace_csv(out_dir / trace_file, rows);

    table << format_double(cell.w) << ',' << cell.seed << ',' << to_string(cell.run.report.status)
          << ',' << (rows.empty() ? 0 : rows.back().k) << ',' << first_boundary << ',' << k_half
          << ',' << k_tenth << ',' << k_hundredth << '\n';

    auto& per_w = stats[cell.w];
    per_w[0].push_back(first_boundary);
    per_w[1].push_back(k_half);
    per_w[2].push_back(k_tenth);
    per_w[3].push_back(k_hundredth);
    flat.push_back(std::move(cell.run));
  }

  std::ofstream medians(out_dir / "ablation_medians.csv");
  if (!medians) throw IoError("cmd_ablate: cannot open medians table");
  medians << "w,median_first_k_boundary,median_first_k_hypergrad_half,"
             "median_first_k_hypergrad_tenth,median_first_k_hypergrad_hundredth\n";
  for (const auto& [w, per_w] : stats) {
    medians << format_double(w) << ',' << format_double(median(per_w[0])) << ','
            << format_double(median(per_w[1])) << ',' << format_double(median(per_w[2])) << ','
            << format_double(median(per_w[3])) << '\n';
  }

  json summary;
  summary["command"] = "ablate";
  summary["config"] = config_echo(cfg);
  summary["table"] = "ablation_summary.csv";
  summary["medians"] = "ablation_medians.csv";
  write_json(out_dir / "summary.json", summary);
  return exit_code_for(flat, opts);
}

int cmd_gradcheck(const ExperimentConfig& cfg, const RunOptions& opts) {
  const std::uint64_t seed = opts.seed_override.value_or(cfg.seeds.front());
  const std::unique_ptr<BilevelProblem> problem = build_problem(cfg, seed);
  const GradCheckResult res = gradcheck_problem(*problem, cfg.gradcheck_points, seed);
  *opts.out << "gradcheck problem=" << cfg.problem << " points=" << cfg.gradcheck_points
            << " seed=" << seed << '\n'
            << "worst_rel_err grad_f   = " << format_double(res.worst_grad_f) << '\n'
            << "worst_rel_err grad_y_g = " << format_double(res.worst_grad_y_g) << '\n'
            << "worst_rel_err grad_h   = " << format_double(res.worst_grad_h) << '\n';
  if (res.worst() <= kGradCheckTol) {
    return kExitOk;
  }
  *opts.err << "gradcheck: worst relative error " << format_double(res.worst()) << " exceeds "
            << format_double(kGradCheckTol) << '\n';
  return kExitCheckFailure;
}

int cmd_qcqp_selftest(long long count, std::uint64_t seed, std::ostream& out) {
  if (count < 0) {
    throw ConfigError("count", "must be >= 0");
  }
  if (count == 0) {
    out << "qcqp-selftest: count = 0, vacuous pass (warning: nothing checked)\n";
    return kExitOk;
  }
  std::mt19937_64 rng(seed);
  double max_dev = 0.0;
  long long psi_inversions = 0;  // bisection validity sanity; logged only
  for (long long i = 0; i < count; ++i) {
    const QcqpInstance inst = random_feasible_instance(rng);
    const QcqpSolution closed = solve_direction(inst.eval, inst.params);
    const QcqpSolution reference =
        qcqp_oracle(inst.eval, inst.params, 1e-12 * qcqp_scale(inst.eval, inst.params));
    const double dev = (closed.delta_z - reference.delta_z).norm() /
                       (1.0 + reference.delta_z.norm());
    max_dev = std::max(max_dev, dev);

    const auto psi = [&](double lambda) {
      const Eigen::VectorXd dz = -(inst.eval.grad_f + lambda * inst.eval.grad_h) /
                                 (1.0 + 2.0 * lambda * inst.params.w);
      return inst.eval.grad_h.dot(dz) +
             inst.params.alpha_b * (inst.eval.h - inst.params.eps * inst.params.eps) +
             inst.params.w * dz.squaredNorm();
    };
    double prev = psi(0.0);
    for (const double lambda : {0.1, 1.0, 10.0, 100.0}) {
      const double cur = psi(lambda);
      if (cur > prev + 1e-12) ++psi_inversions;
      prev = cur;
    }
  }
  out << "qcqp-selftest: count=" << count << " seed=" << seed
      << " max_deviation=" << format_double(max_dev)
      << " psi_monotonicity_violations=" << psi_inversions << '\n';
  return max_dev <= 1e-8 ? kExitOk : kExitCheckFailure;
}

int cmd_compare(const ExperimentConfig& cfg, const RunOptions& opts) {
  const fs::path out_dir = resolve_out_dir(cfg, opts);
  fs::create_directories(out_dir);
  const std::vector<std::uint64_t> seeds = effective_seeds(cfg, opts);
  const bool with_barrier = cfg.compare_mode != "baseline-only";
  const double eps = cfg.solver.eps;

  std::vector<RunResult> barrier_runs;
  json summary;
  summary["command"] = "compare";
  summary["config"] = config_echo(cfg);
  summary["runs"] = json::array();

  for (const std::uint64_t seed : seeds) {
    const std::unique_ptr<BilevelProblem> problem = build_problem(cfg, seed);
    Iterate z0 = draw_start_point(cfg, *problem, seed);
    if (cfg.init) {
      try {
        z0 = init_feasible(*problem, z0, eps, cfg.init_margin, cfg.init_budget);
      } catch (const InitBudgetExhausted& e) {
        *opts.err << "compare seed=" << seed << ": " << e.what() << '\n';
        return kExitInfeasibleStart;
      }
    }

    RunResult barrier;
    if (with_barrier) {
      barrier = run_single(cfg, cfg.solver.qcqp.w, seed);
      barrier_runs.push_back(barrier);
    }

    AidConfig aid;
    aid.inner_steps = cfg.aid_inner_steps;
    aid.outer_steps = cfg.aid_outer_steps;
    aid.cg_tol = cfg.hypergrad_tol;
    const std::vector<AidMetrics> baseline = aid_baseline(*problem, z0, aid);

    const std::string file = "compare_seed" + std::to_string(seed) + ".csv";
    std::ofstream out(out_dir / file);
    if (!out) throw IoError("cmd_compare: cannot open '" + file + "'");
    out << "k,barrier_hypergrad_norm,barrier_sqrt_h,baseline_hypergrad_norm,"
           "baseline_sqrt_h,baseline_violation\n";
    const std::size_t rows = std::max(with_barrier ? barrier.rows.size() : 0, baseline.size());
    int baseline_violations = 0;
    for (std::size_t j = 0; j < rows; ++j) {
      out << j << ',';
      if (with_barrier && j < barrier.rows.size()) {
        const TraceRow& row = barrier.rows[j];
        out << format_double(row.hypergrad_norm) << ','
            << format_double(std::sqrt(std::max(0.0, row.h_minus_eps2 + eps * eps)));
      } else {
        out << ',';
      }
      out << ',';
      if (j < baseline.size()) {
        const bool violation = baseline[j].lower_level_residual > eps;
        baseline_violations += violation ? 1 : 0;
        out << format_double(baseline[j].hypergrad_norm) << ','
            << format_double(baseline[j].lower_level_residual) << ',' << (violation ? 1 : 0);
      } else {
        out << ",,";
      }
      out << '\n';
    }

    json entry;
    entry["seed"] = seed;
    entry["trace_file"] = file;
    entry["baseline_rows"] = baseline.size();
    entry["baseline_violations"] = baseline_violations;
    entry["baseline_final_hypergrad_norm"] =
        baseline.empty() ? std::numeric_limits<double>::quiet_NaN()
                         : baseline.back().hypergrad_norm;
    if (with_barrier) {
      entry["barrier_status"] = to_string(barrier.report.status);
      entry["barrier_final_hypergrad_norm"] =
          barrier.rows.empty() ? std::numeric_limits<double>::quiet_NaN()
                               : barrier.rows.back().hypergrad_norm;
      entry["barrier_final_sqrt_h"] = final_sqrt_h(barrier, eps);
    }
    summary["runs"].push_back(entry);
  }
  write_json(out_dir / "compare_summary.json", summary);
  return exit_code_for(barrier_runs, opts);
}

}  // namespace bblo::cli
