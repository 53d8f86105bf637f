// Copyright (c) barrier-blo contributors
#include "barrier_blo/problem.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace bblo {

PointSample sample_point(const BilevelProblem& problem, Iterate z) {
  if (z.dims() != problem.dims()) {
    throw Error("sample_point: iterate dimensions do not match the problem");
  }
  PointSample s;
  s.z = std::move(z);
  s.f = problem.eval_f(s.z);
  s.grad_y_g = problem.grad_y_g(s.z);
  if (!std::isfinite(s.f) || !s.grad_y_g.allFinite()) {
    throw NonFiniteEvaluation("sample_point: f or grad_y_g returned NaN/Inf");
  }
  if (s.grad_y_g.size() != s.z.m()) {
    throw Error("sample_point: grad_y_g has wrong length");
  }
  s.h = s.grad_y_g.squaredNorm();
  return s;
}

ProblemEval complete_sample(const BilevelProblem& problem, PointSample sample) {
  ProblemEval eval;
  eval.z = std::move(sample.z);
  eval.f = sample.f;
  eval.grad_y_g = std::move(sample.grad_y_g);
  eval.h = sample.h;
  eval.grad_f = problem.grad_f(eval.z);
  eval.grad_h = 2.0 * problem.vjp_grad_y_g(eval.z, eval.grad_y_g);
  if (!eval.grad_f.allFinite() || !eval.grad_h.allFinite()) {
    throw NonFiniteEvaluation("complete_sample: grad_f or vjp_grad_y_g returned NaN/Inf");
  }
  if (eval.grad_f.size() != eval.z.size() || eval.grad_h.size() != eval.z.size()) {
    throw Error("complete_sample: gradient has wrong length");
  }
  return eval;
}

ProblemEval evaluate(const BilevelProblem& problem, const Iterate& z) {
  return complete_sample(problem, sample_point(problem, z));
}

bool check_regularity(const ProblemEval& eval, double tol) {
  return eval.h > tol && eval.grad_h.norm() <= tol * std::max(1.0, eval.h);
}

}  // namespace bblo
