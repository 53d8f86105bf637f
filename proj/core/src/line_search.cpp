// Copyright (c) barrier-blo contributors
#include "barrier_blo/line_search.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bblo {

void LineSearchConfig::validate() const {
  if (!(alpha_ls > 0.0 && alpha_ls < 1.0)) throw ConfigError("alpha_ls", "must be in (0,1)");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma", "must be in (0,1)");
  if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("beta", "must be in (0,1)");
  if (!(t_max > 0.0)) throw ConfigError("t_max", "must be > 0");
  if (max_backtracks < 1) throw ConfigError("max_backtracks", "must be a positive integer");
}

LineSearchResult backtrack(const BilevelProblem& problem, const ProblemEval& eval,
                           const Eigen::VectorXd& delta_z, const LineSearchConfig& cfg,
                           double eps) {
  cfg.validate();
  const double eps2 = eps * eps;
  const double f_old = eval.f;
  const double h_old = eval.h;
  const double dir_deriv = eval.grad_f.dot(delta_z);
  const double slack_f = 1e-14 * std::max(1.0, std::abs(f_old));
  const double slack_h = 1e-14 * std::max(1.0, std::abs(h_old - eps2));
  const double safety_rhs = (1.0 - cfg.gamma) * (h_old - eps2);

  double last_t = 0.0, last_al = 0.0, last_ar = 0.0, last_sl = 0.0;
  for (int j = 0; j <= cfg.max_backtracks; ++j) {
    const double t = cfg.t_max * std::pow(cfg.beta, j);
    PointSample sample = sample_point(problem, eval.z.advanced(t, delta_z));

    const double armijo_lhs = sample.f;
    const double armijo_rhs = f_old + cfg.alpha_ls * t * dir_deriv;
    const double safety_lhs = sample.h - eps2;
    if (armijo_lhs <= armijo_rhs + slack_f && safety_lhs <= safety_rhs + slack_h) {
      LineSearchResult res;
      res.t = t;
      res.backtracks = j;
      res.accepted = std::move(sample);
      res.armijo_lhs = armijo_lhs;
      res.armijo_rhs = armijo_rhs;
      res.safety_lhs = safety_lhs;
      res.safety_rhs = safety_rhs;
      return res;
    }
    last_t = t;
    last_al = armijo_lhs;
    last_ar = armijo_rhs;
    last_sl = safety_lhs;
  }

  std::ostringstream msg;
  msg << "backtrack: no step accepted after " << cfg.max_backtracks
      << " backtracks (last t=" << last_t << ", armijo lhs-rhs=" << (last_al - last_ar)
      << ", safety lhs-rhs=" << (last_sl - safety_rhs) << ")";
  throw MaxBacktracksExceeded(msg.str(), last_t, last_al, last_ar, last_sl, safety_rhs);
}

bool check_safety_chain(std::span<const double> h_values, double eps, double gamma) {
  if (h_values.empty()) {
    return true;
  }
  const double eps2 = eps * eps;
  const double e0 = h_values[0] - eps2;
  for (std::size_t k = 0; k < h_values.size(); ++k) {
    const double bound = std::pow(1.0 - gamma, static_cast<double>(k)) * e0 + 1e-12;
    if (h_values[k] - eps2 > bound) {
      return false;
    }
  }
  return true;
}

}  // namespace bblo
