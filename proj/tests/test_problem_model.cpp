// Copyright (c) barrier-blo contributors
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <barrier_blo/oracles.hpp>
#include <barrier_blo/problem.hpp>
#include <barrier_blo/problems.hpp>

#include "helpers.hpp"

using namespace bblo;

TEST_CASE("iterate invariants") {
  CHECK_THROWS_AS(Iterate(Eigen::VectorXd::Zero(3), 0, 3), Error);
  CHECK_THROWS_AS(Iterate(Eigen::VectorXd::Zero(3), 2, 2), Error);
  Eigen::VectorXd bad(2);
  bad << 1.0, std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(Iterate(bad, 1, 1), Error);

  const Iterate z = Iterate::from_parts(Eigen::Vector2d(1.0, 2.0), Eigen::Vector3d(3.0, 4.0, 5.0));
  CHECK(z.n() == 2);
  CHECK(z.m() == 3);
  CHECK(z.x()(1) == 2.0);
  CHECK(z.y()(2) == 5.0);
}

TEST_CASE("evaluate on the 1d coupling quadratic") {
  auto p = testing::one_dim_coupling(nullptr, nullptr);
  const Iterate z = Iterate::from_parts(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, 2.0));
  const ProblemEval eval = evaluate(p, z);

  CHECK(eval.grad_y_g(0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(eval.h == doctest::Approx(4.0).epsilon(1e-14));
  // exact gradient of h = (y - x)^2 at (0, 2)
  CHECK(eval.grad_h(0) == doctest::Approx(-4.0).epsilon(1e-14));
  CHECK(eval.grad_h(1) == doctest::Approx(4.0).epsilon(1e-14));

  // cross-check against central differences of h
  const Eigen::VectorXd fd = fd_gradient(
      [&](const Eigen::VectorXd& v) {
        return p.grad_y_g(Iterate(v, 1, 1)).squaredNorm();
      },
      z.data());
  CHECK((fd - eval.grad_h).norm() <= 1e-8);
}

TEST_CASE("evaluate zero gradient case") {
  auto p = testing::one_dim_coupling(nullptr, nullptr);
  const Iterate z = Iterate::from_parts(Eigen::VectorXd::Constant(1, 1.5),
                                        Eigen::VectorXd::Constant(1, 1.5));
  const ProblemEval eval = evaluate(p, z);
  CHECK(eval.h == 0.0);
  CHECK(eval.grad_h.norm() == 0.0);
}

TEST_CASE("synthetic at the origin with identity H") {
  SyntheticSpec spec;
  spec.dim = 20;
  spec.c = Eigen::VectorXd::Ones(20);
  spec.d = Eigen::VectorXd::Ones(20);
  spec.H = Eigen::MatrixXd::Identity(20, 20);
  auto p = make_synthetic(std::move(spec));
  const ProblemEval eval = evaluate(*p, Iterate::zero(20, 20));
  CHECK(eval.f == 0.0);  // sin(0) + log(1)
  CHECK(eval.grad_y_g.norm() == 0.0);
  CHECK(eval.h == 0.0);
}

TEST_CASE("non finite evaluation is rejected") {
  auto p = testing::pure_upper_quadratic(1, 1);
  p.f_fn = [](const Iterate&) { return std::numeric_limits<double>::infinity(); };
  CHECK_THROWS_AS(evaluate(p, Iterate::zero(1, 1)), NonFiniteEvaluation);
}

TEST_CASE("check_regularity flags only the contradiction") {
  ProblemEval eval;
  eval.z = Iterate::zero(1, 1);
  eval.grad_y_g = Eigen::VectorXd::Constant(1, 2.0);

  eval.h = 4.0;
  eval.grad_h = Eigen::Vector2d(-4.0, 4.0);
  CHECK_FALSE(check_regularity(eval, 1e-9));

  eval.h = 0.0;
  eval.grad_h = Eigen::Vector2d(0.0, 0.0);
  CHECK_FALSE(check_regularity(eval, 1e-9));

  eval.h = 1.0;
  CHECK(check_regularity(eval, 1e-9));
}

TEST_CASE("h matches the squared norm on random points of bundled problems") {
  std::mt19937_64 rng(11);
  auto synthetic = make_synthetic(3);
  auto testbed = make_quadratic_testbed(6, 5);
  DhcSpec dspec;
  dspec.num_train = 30;
  dspec.num_val = 15;
  dspec.num_test = 15;
  dspec.seed = 2;
  auto dhc = make_dhc(dspec);

  for (const BilevelProblem* p :
       {static_cast<const BilevelProblem*>(synthetic.get()),
        static_cast<const BilevelProblem*>(testbed.get()),
        static_cast<const BilevelProblem*>(dhc.get())}) {
    const Dims dims = p->dims();
    for (int trial = 0; trial < 10; ++trial) {
      const Iterate z(testing::random_vector(dims.size(), rng), dims.n, dims.m);
      const ProblemEval eval = evaluate(*p, z);
      CHECK(eval.h >= 0.0);
      CHECK(std::abs(eval.h - eval.grad_y_g.squaredNorm()) <= 1e-12 * std::max(1.0, eval.h));
    }
  }
}

TEST_CASE("vjp linearity on bundled problems") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> coeff(-2.0, 2.0);
  auto synthetic = make_synthetic(4);
  auto testbed = make_quadratic_testbed(5, 6);
  DhcSpec dspec;
  dspec.num_train = 20;
  dspec.num_val = 10;
  dspec.num_test = 10;
  dspec.seed = 3;
  auto dhc = make_dhc(dspec);

  for (const BilevelProblem* p :
       {static_cast<const BilevelProblem*>(synthetic.get()),
        static_cast<const BilevelProblem*>(testbed.get()),
        static_cast<const BilevelProblem*>(dhc.get())}) {
    const Dims dims = p->dims();
    for (int trial = 0; trial < 20; ++trial) {
      const Iterate z(testing::random_vector(dims.size(), rng), dims.n, dims.m);
      const Eigen::VectorXd u = testing::random_vector(dims.m, rng);
      const Eigen::VectorXd v = testing::random_vector(dims.m, rng);
      const double a = coeff(rng);
      const double b = coeff(rng);
      const Eigen::VectorXd combined = p->vjp_grad_y_g(z, a * u + b * v);
      const Eigen::VectorXd split = a * p->vjp_grad_y_g(z, u) + b * p->vjp_grad_y_g(z, v);
      CHECK((combined - split).norm() <= 1e-10 * std::max(1.0, split.norm()));
    }
  }
}

TEST_CASE("grad_h agrees with central differences on bundled problems") {
  std::mt19937_64 rng(23);
  auto synthetic = make_synthetic(7);
  auto testbed = make_quadratic_testbed(4, 8);
  DhcSpec dspec;
  dspec.num_train = 24;
  dspec.num_val = 12;
  dspec.num_test = 12;
  dspec.seed = 4;
  auto dhc = make_dhc(dspec);

  for (const BilevelProblem* p :
       {static_cast<const BilevelProblem*>(synthetic.get()),
        static_cast<const BilevelProblem*>(testbed.get()),
        static_cast<const BilevelProblem*>(dhc.get())}) {
    const Dims dims = p->dims();
    double worst = 0.0;
    for (int trial = 0; trial < 25; ++trial) {
      const Iterate z(testing::random_vector(dims.size(), rng), dims.n, dims.m);
      const ProblemEval eval = evaluate(*p, z);
      const Eigen::VectorXd fd = fd_gradient(
          [&](const Eigen::VectorXd& v) {
            return p->grad_y_g(Iterate(v, dims.n, dims.m)).squaredNorm();
          },
          z.data());
      worst = std::max(worst, (fd - eval.grad_h).norm() / std::max(1.0, eval.grad_h.norm()));
    }
    CHECK(worst <= 1e-5);
  }
}
