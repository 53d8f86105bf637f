// Copyright (c) barrier-blo contributors
#include "barrier_blo/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <utility>

namespace bblo {

void SolverConfig::validate() const {
  if (!(eps > 0.0)) throw ConfigError("eps", "tolerance must be > 0");
  if (!(tol_dz >= 0.0)) throw ConfigError("tol_dz", "must be >= 0");
  if (max_iter < 0) throw ConfigError("max_iter", "must be >= 0");
  if (record_every < 1) throw ConfigError("record_every", "must be a positive integer");
  QcqpParams effective = qcqp;
  effective.eps = eps;
  effective.validate();
  ls.validate();
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kStationary: return "Stationary";
    case SolveStatus::kMaxIter: return "MaxIter";
    case SolveStatus::kLineSearchFailure: return "LineSearchFailure";
    case SolveStatus::kInfeasibleStart: return "InfeasibleStart";
  }
  return "Unknown";
}

KktDiagnostics kkt_diagnostics(const ProblemEval& eval, double lambda, double eps) {
  const double slack = eval.h - eps * eps;
  KktDiagnostics d;
  d.stationarity = (eval.grad_f + lambda * eval.grad_h).norm();
  d.feasibility = std::max(0.0, slack);
  const double base = std::max(d.stationarity, d.feasibility);
  // Near-active constraints are held to the complementarity product; a
  // strictly inactive constraint must carry a zero multiplier.
  d.complementarity = (slack >= -base) ? lambda * std::abs(slack) : lambda;
  d.eps_tilde = std::max(base, d.complementarity);
  d.stationary_form_residual = (eval.grad_f + 0.5 * lambda * eval.grad_h).norm();
  d.lower_level_residual = std::sqrt(std::max(0.0, eval.h));
  return d;
}

double kkt_residual(const ProblemEval& eval, double lambda, double eps) {
  return kkt_diagnostics(eval, lambda, eps).eps_tilde;
}

SolveReport solve(const BilevelProblem& problem, const Iterate& z0, const SolverConfig& cfg,
                  const IterationObserver& observer) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const auto wall_ms = [&start] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
  };

  SolveReport report;
  report.config = cfg;
  report.seed = cfg.seed;

  QcqpParams qp = cfg.qcqp;
  qp.eps = cfg.eps;
  const double eps2 = cfg.eps * cfg.eps;

  ProblemEval eval = evaluate(problem, z0);
  if (eval.h > eps2) {
    report.status = SolveStatus::kInfeasibleStart;
    report.final_iterate = z0;
    report.message = "h(z0) > eps^2; run init_feasible first";
    return report;
  }

  double sum_dz2 = 0.0;
  for (int k = 0;; ++k) {
    if (check_regularity(eval, 1e-9)) {
      ++report.regularity_flags;
    }
    const QcqpSolution dir = solve_direction(eval, qp);
    const KktDiagnostics kkt = kkt_diagnostics(eval, dir.lambda, cfg.eps);
    const double norm_dz = dir.delta_z.norm();

    const bool stationary = norm_dz <= cfg.tol_dz;
    if (stationary || k >= cfg.max_iter) {
      if (observer) {
        observer(IterationEvent{k, eval, dir, kkt, nullptr});
      }
      report.trace.push_back(IterationRecord{k, eval.f, eval.h - eps2, norm_dz, 0.0, dir.lambda,
                                             0, kkt.eps_tilde, wall_ms()});
      report.status = stationary ? SolveStatus::kStationary : SolveStatus::kMaxIter;
      break;
    }

    LineSearchResult ls;
    try {
      ls = backtrack(problem, eval, dir.delta_z, cfg.ls, cfg.eps);
    } catch (const MaxBacktracksExceeded& e) {
      if (observer) {
        observer(IterationEvent{k, eval, dir, kkt, nullptr});
      }
      report.trace.push_back(IterationRecord{k, eval.f, eval.h - eps2, norm_dz, 0.0, dir.lambda,
                                             cfg.ls.max_backtracks, kkt.eps_tilde, wall_ms()});
      report.status = SolveStatus::kLineSearchFailure;
      report.message = e.what();
      break;
    }

    if (observer) {
      observer(IterationEvent{k, eval, dir, kkt, &ls});
    }
    sum_dz2 += norm_dz * norm_dz;
    if (k % cfg.record_every == 0) {
      report.trace.push_back(IterationRecord{k, eval.f, eval.h - eps2, norm_dz, ls.t, dir.lambda,
                                             ls.backtracks, kkt.eps_tilde, wall_ms()});
      report.ergodic_avg.push_back(sum_dz2 / static_cast<double>(k + 1));
    }
    eval = complete_sample(problem, std::move(ls.accepted));
  }

  report.final_iterate = eval.z;
  return report;
}

Iterate init_feasible(const BilevelProblem& problem, const Iterate& z0, double eps,
                      double margin, int budget) {
  if (!(eps > 0.0)) throw ConfigError("eps", "tolerance must be > 0");
  if (!(margin > 0.0 && margin < 1.0)) throw ConfigError("margin", "must be in (0,1)");
  if (budget < 0) throw ConfigError("budget", "must be >= 0");
  const double target = (1.0 - margin) * eps * eps;
  const Dims dims = problem.dims();

  const auto barrier_at = [&](const Eigen::VectorXd& data) {
    const Eigen::VectorXd gy = problem.grad_y_g(Iterate(data, dims.n, dims.m));
    if (!gy.allFinite()) {
      throw NonFiniteEvaluation("init_feasible: grad_y_g returned NaN/Inf");
    }
    return gy.squaredNorm();
  };

  Eigen::VectorXd z = z0.data();
  double h = barrier_at(z);
  for (int step = 0;; ++step) {
    if (h <= target) {
      return Iterate(z, dims.n, dims.m);
    }
    if (step >= budget) {
      throw InitBudgetExhausted("init_feasible: budget exhausted before reaching the target");
    }
    const Iterate zi(z, dims.n, dims.m);
    const Eigen::VectorXd grad_h = 2.0 * problem.vjp_grad_y_g(zi, problem.grad_y_g(zi));
    const double g2 = grad_h.squaredNorm();
    if (g2 == 0.0) {
      throw InitBudgetExhausted(
          "init_feasible: grad_h vanished above the target (regularity violated)");
    }
    bool accepted = false;
    double t = 1.0;
    for (int j = 0; j < 60; ++j, t *= 0.5) {
      const double h_t = barrier_at(z - t * grad_h);
      if (h_t <= h - 0.1 * t * g2 + 1e-14 * std::max(1.0, h)) {
        z -= t * grad_h;
        h = h_t;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      throw InitBudgetExhausted("init_feasible: descent on h stalled");
    }
  }
}

}  // namespace bblo
