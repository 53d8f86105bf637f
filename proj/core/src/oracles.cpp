// Copyright (c) barrier-blo contributors
#include "barrier_blo/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace bblo {

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& fun,
                            const Eigen::VectorXd& z, const FdConfig& cfg) {
  if (!(cfg.step > 0.0)) throw ConfigError("step", "must be > 0");
  Eigen::VectorXd grad(z.size());
  Eigen::VectorXd probe = z;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    probe(i) = z(i) + cfg.step;
    const double fp = fun(probe);
    probe(i) = z(i) - cfg.step;
    const double fm = fun(probe);
    probe(i) = z(i);
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw NonFiniteEvaluation("fd_gradient: function returned NaN/Inf near z");
    }
    grad(i) = (fp - fm) / (2.0 * cfg.step);
  }
  return grad;
}

QcqpSolution qcqp_oracle(const ProblemEval& eval, const QcqpParams& params, double tol) {
  params.validate();
  const double slack = eval.h - params.eps * params.eps;

  const auto dz_of = [&](double lambda) {
    return (-(eval.grad_f + lambda * eval.grad_h) / (1.0 + 2.0 * lambda * params.w)).eval();
  };
  const auto psi = [&](double lambda) {
    const Eigen::VectorXd dz = dz_of(lambda);
    return eval.grad_h.dot(dz) + params.alpha_b * slack + params.w * dz.squaredNorm();
  };

  QcqpSolution sol;
  sol.center = -eval.grad_h / (2.0 * params.w);
  sol.radius = std::sqrt(
      std::max(0.0, sol.center.squaredNorm() - (params.alpha_b / params.w) * slack));

  if (psi(0.0) <= 0.0) {
    sol.lambda = 0.0;
    sol.delta_z = -eval.grad_f;
    sol.branch = QcqpBranch::kInterior;
    sol.constraint_residual = psi(0.0);
    return sol;
  }

  double lo = 0.0;
  double hi = 1.0;
  while (psi(hi) > 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) {
      throw BracketFailure("qcqp_oracle: psi stayed positive up to lambda = 1e12");
    }
  }
  double lambda = hi;
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) {
      break;
    }
    const double value = psi(mid);
    if (std::abs(value) <= tol) {
      lambda = mid;
      lo = hi = mid;
      break;
    }
    if (value > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
    lambda = hi;
  }

  sol.lambda = lambda;
  sol.delta_z = dz_of(lambda);
  sol.branch = QcqpBranch::kBoundaryProjection;
  sol.constraint_residual = psi(lambda);
  return sol;
}

namespace {

struct CgResult {
  Eigen::VectorXd x;
  double residual = 0.0;
};

// Matrix-free conjugate gradient for an SPD operator.
CgResult conjugate_gradient(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply,
                            const Eigen::VectorXd& rhs, double tol) {
  const double rhs_scale = std::max(1.0, rhs.norm());
  CgResult out;
  out.x = Eigen::VectorXd::Zero(rhs.size());
  Eigen::VectorXd r = rhs;
  double r2 = r.squaredNorm();
  if (std::sqrt(r2) <= tol * rhs_scale) {
    out.residual = std::sqrt(r2);
    return out;
  }
  Eigen::VectorXd p = r;
  const int max_iter = static_cast<int>(10 * rhs.size() + 100);
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd ap = apply(p);
    const double curvature = p.dot(ap);
    if (curvature <= 0.0) {
      throw IndefiniteHessian("conjugate_gradient: non-positive curvature detected");
    }
    const double alpha = r2 / curvature;
    out.x += alpha * p;
    r -= alpha * ap;
    const double r2_new = r.squaredNorm();
    if (std::sqrt(r2_new) <= tol * rhs_scale) {
      r2 = r2_new;
      break;
    }
    p = r + (r2_new / r2) * p;
    r2 = r2_new;
  }
  out.residual = std::sqrt(r2);
  return out;
}

}  // namespace

HypergradEstimate exact_hypergradient(const BilevelProblem& problem, const Iterate& z,
                                      double tol, HypergradMethod method) {
  const Dims dims = problem.dims();
  const Eigen::VectorXd grad_f = problem.grad_f(z);
  const Eigen::VectorXd rhs = grad_f.tail(dims.m);

  HypergradEstimate est;
  Eigen::VectorXd v;
  if (method == HypergradMethod::kExactSolve) {
    if (!problem.has_exact_yy_solve()) {
      throw Error("exact_hypergradient: problem does not provide an exact yy solve");
    }
    v = problem.solve_yy(z, rhs);
    est.method = HypergradMethod::kExactSolve;
    est.inner_residual =
        problem.has_hvp_yy() ? (problem.hvp_yy(z, v) - rhs).norm() : 0.0;
  } else {
    if (!problem.has_hvp_yy()) {
      throw Error("exact_hypergradient: problem does not provide hvp_yy");
    }
    CgResult cg = conjugate_gradient(
        [&](const Eigen::VectorXd& p) { return problem.hvp_yy(z, p); }, rhs, tol);
    v = std::move(cg.x);
    est.method = HypergradMethod::kConjugateGradient;
    est.inner_residual = cg.residual;
  }

  const Eigen::VectorXd jtv = problem.vjp_grad_y_g(z, v);
  est.F = grad_f.head(dims.n) - jtv.head(dims.n);
  if (!est.F.allFinite()) {
    throw NonFiniteEvaluation("exact_hypergradient: result is not finite");
  }
  return est;
}

namespace {

Iterate join_iterate(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  return Iterate::from_parts(x, y);
}

// inner gradient descent on y for fixed x, with backtracking on g.
void refine_lower_level(const BilevelProblem& problem, const Eigen::VectorXd& x,
                        Eigen::VectorXd& y, const AidConfig& cfg) {
  for (int i = 0; i < cfg.inner_steps; ++i) {
    const Iterate z = join_iterate(x, y);
    const Eigen::VectorXd gy = problem.grad_y_g(z);
    const double g2 = gy.squaredNorm();
    if (std::sqrt(g2) <= cfg.inner_tol) {
      return;
    }
    const double g_val = problem.eval_g(z);
    bool accepted = false;
    double t = 1.0;
    for (int j = 0; j < 40; ++j, t *= 0.5) {
      const double g_t = problem.eval_g(join_iterate(x, y - t * gy));
      if (g_t <= g_val - cfg.armijo_alpha * t * g2 + 1e-14 * std::max(1.0, std::abs(g_val))) {
        y -= t * gy;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      return;  // stalled; caller sees the residual in the metrics
    }
  }
}

}  // namespace

std::vector<AidMetrics> aid_baseline(const BilevelProblem& problem, const Iterate& z0,
                                     const AidConfig& cfg) {
  if (cfg.inner_steps < 0) throw ConfigError("inner_steps", "must be >= 0");
  if (cfg.outer_steps < 0) throw ConfigError("outer_steps", "must be >= 0");

  Eigen::VectorXd x = z0.x();
  Eigen::VectorXd y = z0.y();
  std::vector<AidMetrics> trace;
  trace.reserve(static_cast<std::size_t>(cfg.outer_steps) + 1);

  for (int outer = 0;; ++outer) {
    refine_lower_level(problem, x, y, cfg);
    const Iterate z = join_iterate(x, y);
    const HypergradEstimate est =
        exact_hypergradient(problem, z, cfg.cg_tol, HypergradMethod::kConjugateGradient);
    const double f_norm = est.F.norm();
    trace.push_back(AidMetrics{f_norm, problem.grad_y_g(z).norm()});
    if (outer >= cfg.outer_steps) {
      break;
    }

    // Outer backtracked step on x along -F; each candidate refreshes the
    // lower level from the current y.
    const double f_curr = problem.eval_f(z);
    double t = 1.0;
    for (int j = 0; j <= cfg.max_backtracks; ++j, t *= cfg.beta) {
      Eigen::VectorXd y_t = y;
      const Eigen::VectorXd x_t = x - t * est.F;
      refine_lower_level(problem, x_t, y_t, cfg);
      const double f_t = problem.eval_f(join_iterate(x_t, y_t));
      if (f_t <= f_curr - cfg.armijo_alpha * t * f_norm * f_norm +
                     1e-14 * std::max(1.0, std::abs(f_curr))) {
        x = x_t;
        y = std::move(y_t);
        break;
      }
    }
    // No candidate accepted: keep x and let the trace show the stall.
  }
  return trace;
}

QcqpInstance random_feasible_instance(std::mt19937_64& rng, const QcqpInstanceOptions& opts) {
  std::uniform_int_distribution<int> dim_dist(opts.min_dim, opts.max_dim);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  const int dim = dim_dist(rng);
  const int m = std::max(1, dim / 2);
  const int n = std::max(1, dim - m);

  QcqpInstance inst;
  // Log-uniform parameter draws over the ranges the equivalence property is
  // stated on.
  inst.params.w = std::exp(std::log(1e-4) + unit(rng) * (std::log(1.0) - std::log(1e-4)));
  inst.params.alpha_b = std::exp(std::log(1e-3) + unit(rng) * (std::log(10.0) - std::log(1e-3)));
  inst.params.eps = 1.2;  // keeps h = eps^2 + delta nonnegative over the delta range

  double delta = opts.delta_min + unit(rng) * (opts.delta_max - opts.delta_min);
  if (opts.boundary_fraction > 0.0 && unit(rng) < opts.boundary_fraction) {
    delta = 0.0;  // pin exactly on the boundary
  }
  const double h = inst.params.eps * inst.params.eps + delta;

  const auto gaussian = [&](int len, double scale) {
    Eigen::VectorXd v(len);
    for (int i = 0; i < len; ++i) v(i) = scale * normal(rng);
    return v;
  };
  const double scale_f = std::exp(std::log(0.1) + unit(rng) * (std::log(10.0) - std::log(0.1)));
  const double scale_h = std::exp(std::log(0.1) + unit(rng) * (std::log(10.0) - std::log(0.1)));

  ProblemEval eval;
  eval.z = Iterate::zero(n, m);
  eval.f = 0.0;
  eval.grad_f = gaussian(n + m, scale_f);
  Eigen::VectorXd gy = gaussian(m, 1.0);
  if (gy.norm() == 0.0) gy(0) = 1.0;
  eval.grad_y_g = gy * (std::sqrt(h) / gy.norm());
  eval.h = h;
  eval.grad_h = gaussian(n + m, scale_h);
  if (eval.grad_h.norm() == 0.0) eval.grad_h(0) = scale_h;
  inst.eval = std::move(eval);
  return inst;
}

}  // namespace bblo
