// Copyright (c) barrier-blo contributors
#pragma once

#include <functional>
#include <random>

#include <barrier_blo/problem.hpp>

namespace bblo::testing {

/// Problem assembled from callables; anything left unset falls back to a
/// trivial lower level (g = 0, grad_y_g = 0, vjp = 0).
struct CallbackProblem final : BilevelProblem {
  Dims d{1, 1};
  std::function<double(const Iterate&)> f_fn;
  std::function<Eigen::VectorXd(const Iterate&)> grad_f_fn;
  std::function<double(const Iterate&)> g_fn;
  std::function<Eigen::VectorXd(const Iterate&)> grad_y_g_fn;
  std::function<Eigen::VectorXd(const Iterate&, const Eigen::VectorXd&)> vjp_fn;
  std::function<Eigen::VectorXd(const Iterate&, const Eigen::VectorXd&)> hvp_fn;

  Dims dims() const override { return d; }
  double eval_f(const Iterate& z) const override { return f_fn ? f_fn(z) : 0.0; }
  Eigen::VectorXd grad_f(const Iterate& z) const override {
    return grad_f_fn ? grad_f_fn(z) : Eigen::VectorXd::Zero(z.size());
  }
  double eval_g(const Iterate& z) const override { return g_fn ? g_fn(z) : 0.0; }
  Eigen::VectorXd grad_y_g(const Iterate& z) const override {
    return grad_y_g_fn ? grad_y_g_fn(z) : Eigen::VectorXd::Zero(z.m());
  }
  Eigen::VectorXd vjp_grad_y_g(const Iterate& z, const Eigen::VectorXd& v) const override {
    return vjp_fn ? vjp_fn(z, v) : Eigen::VectorXd::Zero(z.size());
  }
  bool has_hvp_yy() const override { return static_cast<bool>(hvp_fn); }
  Eigen::VectorXd hvp_yy(const Iterate& z, const Eigen::VectorXd& v) const override {
    return hvp_fn(z, v);
  }
};

/// f = 1/2 ||z||^2 over a trivial lower level (h = 0 everywhere).
inline CallbackProblem pure_upper_quadratic(int n, int m) {
  CallbackProblem p;
  p.d = {n, m};
  p.f_fn = [](const Iterate& z) { return 0.5 * z.data().squaredNorm(); };
  p.grad_f_fn = [](const Iterate& z) { return Eigen::VectorXd(z.data()); };
  return p;
}

/// n = m = 1, g = 1/2 (y - x)^2: grad_y_g = y - x, h = (y - x)^2,
/// grad_h = (-2(y-x), 2(y-x)).
inline CallbackProblem one_dim_coupling(std::function<double(const Iterate&)> f,
                                        std::function<Eigen::VectorXd(const Iterate&)> grad_f) {
  CallbackProblem p;
  p.d = {1, 1};
  p.f_fn = std::move(f);
  p.grad_f_fn = std::move(grad_f);
  p.g_fn = [](const Iterate& z) {
    const double r = z.y()(0) - z.x()(0);
    return 0.5 * r * r;
  };
  p.grad_y_g_fn = [](const Iterate& z) {
    Eigen::VectorXd g(1);
    g(0) = z.y()(0) - z.x()(0);
    return g;
  };
  p.vjp_fn = [](const Iterate&, const Eigen::VectorXd& v) {
    Eigen::VectorXd out(2);
    out(0) = -v(0);
    out(1) = v(0);
    return out;
  };
  p.hvp_fn = [](const Iterate&, const Eigen::VectorXd& v) { return v; };
  return p;
}

inline Eigen::VectorXd random_vector(int len, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(len);
  for (int i = 0; i < len; ++i) v(i) = scale * normal(rng);
  return v;
}

}  // namespace bblo::testing
