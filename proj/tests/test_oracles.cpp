// Copyright (c) barrier-blo contributors
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <barrier_blo/oracles.hpp>
#include <barrier_blo/problems.hpp>
#include <barrier_blo/solver.hpp>

#include "helpers.hpp"

using namespace bblo;

TEST_CASE("fd_gradient basics") {
  SUBCASE("exact on a quadratic up to round-off") {
    const Eigen::VectorXd z = Eigen::Vector2d(3.0, 4.0);
    const Eigen::VectorXd g =
        fd_gradient([](const Eigen::VectorXd& v) { return 0.5 * v.squaredNorm(); }, z);
    CHECK((g - z).norm() <= 1e-9);
  }
  SUBCASE("matches the analytic barrier gradient of the 1d coupling") {
    auto p = testing::one_dim_coupling(nullptr, nullptr);
    const Eigen::VectorXd z = Eigen::Vector2d(0.0, 2.0);
    const Eigen::VectorXd g = fd_gradient(
        [&](const Eigen::VectorXd& v) { return p.grad_y_g(Iterate(v, 1, 1)).squaredNorm(); },
        z);
    CHECK(g(0) == doctest::Approx(-4.0).epsilon(1e-8));
    CHECK(g(1) == doctest::Approx(4.0).epsilon(1e-8));
  }
  SUBCASE("constant field gives the zero vector") {
    const Eigen::VectorXd g =
        fd_gradient([](const Eigen::VectorXd&) { return 42.0; }, Eigen::Vector3d(1, 2, 3));
    CHECK(g.norm() == 0.0);
  }
}

TEST_CASE("qcqp_oracle trivial branches") {
  QcqpParams params{0.5, 0.1, 1.0};
  ProblemEval eval;
  eval.z = Iterate::zero(1, 1);
  eval.grad_y_g = Eigen::VectorXd::Constant(1, std::sqrt(0.5));
  eval.h = 0.5;
  eval.grad_h = Eigen::Vector2d(0.0, 2.0);

  SUBCASE("zero upper gradient") {
    eval.grad_f = Eigen::Vector2d(0.0, 0.0);
    const QcqpSolution sol = qcqp_oracle(eval, params, 1e-12);
    CHECK(sol.lambda == 0.0);
    CHECK(sol.delta_z.norm() == 0.0);
  }
  SUBCASE("inactive constraint") {
    eval.grad_f = Eigen::Vector2d(0.05, -0.01);
    const QcqpSolution sol = qcqp_oracle(eval, params, 1e-12);
    CHECK(sol.lambda == 0.0);
    CHECK((sol.delta_z + eval.grad_f).norm() == 0.0);
  }
}

TEST_CASE("qcqp_oracle reports a bracket failure on an infeasible instance") {
  QcqpParams params{0.5, 1.0, 1.0};
  ProblemEval eval;
  eval.z = Iterate::zero(1, 1);
  eval.grad_y_g = Eigen::VectorXd::Constant(1, std::sqrt(2.0));
  eval.h = 2.0;  // slack 1 with a negligible grad_h: no multiplier closes psi
  eval.grad_h = Eigen::Vector2d(0.0, 1e-9);
  eval.grad_f = Eigen::Vector2d(1.0, 0.0);
  CHECK_THROWS_AS(qcqp_oracle(eval, params, 1e-12), BracketFailure);
}

TEST_CASE("hypergradient on the identity testbed") {
  const QuadraticTestbed p(Eigen::MatrixXd::Identity(3, 3));
  SUBCASE("at y = y*(x) the chain rule doubles the upper gradient") {
    const Eigen::VectorXd x = Eigen::Vector3d(0.3, -1.0, 2.0);
    const Iterate z = Iterate::from_parts(x, x);  // y*(x) = x for H = I
    for (const HypergradMethod method :
         {HypergradMethod::kConjugateGradient, HypergradMethod::kExactSolve}) {
      const HypergradEstimate est = exact_hypergradient(p, z, 1e-12, method);
      CHECK((est.F - 2.0 * x).norm() <= 1e-10);
      CHECK(est.inner_residual <= 1e-10);
    }
  }
  SUBCASE("zero lower gradient reduces to the upper block") {
    const Eigen::VectorXd x = Eigen::Vector3d(1.0, 2.0, 3.0);
    const Iterate z = Iterate::from_parts(x, Eigen::VectorXd::Zero(3));
    const HypergradEstimate est =
        exact_hypergradient(p, z, 1e-12, HypergradMethod::kConjugateGradient);
    CHECK((est.F - x).norm() <= 1e-12);
  }
}

TEST_CASE("hypergradient matches finite differences of the implicit objective") {
  const auto p = make_quadratic_testbed(6, 19);
  std::mt19937_64 rng(3);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::VectorXd x = testing::random_vector(6, rng);
    const Iterate z = Iterate::from_parts(x, p->y_star(x));
    const HypergradEstimate est =
        exact_hypergradient(*p, z, 1e-12, HypergradMethod::kConjugateGradient);
    const Eigen::VectorXd fd =
        fd_gradient([&](const Eigen::VectorXd& v) { return p->implicit_value(v); }, x);
    worst = std::max(worst, (est.F - fd).norm() / std::max(1.0, fd.norm()));
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("cg raises on non-positive curvature") {
  testing::CallbackProblem p;
  p.d = {1, 2};
  p.grad_f_fn = [](const Iterate& z) { return Eigen::VectorXd(Eigen::VectorXd::Ones(z.size())); };
  p.hvp_fn = [](const Iterate&, const Eigen::VectorXd& v) { return Eigen::VectorXd(-v); };
  CHECK_THROWS_AS(
      exact_hypergradient(p, Iterate::zero(1, 2), 1e-10, HypergradMethod::kConjugateGradient),
      IndefiniteHessian);
}

TEST_CASE("aid baseline trace shapes") {
  const auto p = make_quadratic_testbed(3, 4);
  const Iterate z0 = Iterate::zero(3, 3).advanced(1.0, Eigen::VectorXd::Ones(6) * 0.2);
  SUBCASE("zero outer steps records only the initial metrics") {
    AidConfig cfg;
    cfg.outer_steps = 0;
    const auto trace = aid_baseline(*p, z0, cfg);
    CHECK(trace.size() == 1);
  }
  SUBCASE("zero inner steps still reports (hypergradient at unconverged y)") {
    AidConfig cfg;
    cfg.inner_steps = 0;
    cfg.outer_steps = 3;
    const auto trace = aid_baseline(*p, z0, cfg);
    CHECK(trace.size() == 4);
    CHECK(std::isfinite(trace.front().hypergrad_norm));
  }
}

TEST_CASE("baseline and barrier solver both drive the hypergradient below 1e-4") {
  const auto p = make_quadratic_testbed(4, 8);
  std::mt19937_64 rng(2);
  Eigen::VectorXd z = testing::random_vector(8, rng);
  z *= std::sqrt(0.5 * 0.01 / p->grad_y_g(Iterate(z, 4, 4)).squaredNorm());
  const Iterate z0(z, 4, 4);

  AidConfig aid;
  aid.inner_steps = 200;
  aid.outer_steps = 120;
  const auto baseline = aid_baseline(*p, z0, aid);
  CHECK(baseline.back().hypergrad_norm <= 1e-4);

  SolverConfig cfg;
  cfg.max_iter = 20000;
  cfg.tol_dz = 1e-8;
  const SolveReport report = solve(*p, z0, cfg);
  REQUIRE(report.status == SolveStatus::kStationary);
  const HypergradEstimate est = exact_hypergradient(*p, report.final_iterate, 1e-12,
                                                    HypergradMethod::kConjugateGradient);
  CHECK(est.F.norm() <= 1e-4);
}

TEST_CASE("random feasible instances respect the requested geometry") {
  std::mt19937_64 rng(31);
  int boundary = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const QcqpInstance inst = random_feasible_instance(rng);
    const double eps2 = inst.params.eps * inst.params.eps;
    CHECK(inst.eval.h >= 0.0);
    CHECK(inst.eval.h <= eps2);
    CHECK(std::abs(inst.eval.h - inst.eval.grad_y_g.squaredNorm()) <=
          1e-12 * std::max(1.0, inst.eval.h));
    if (inst.eval.h == eps2) ++boundary;
  }
  CHECK(boundary > 0);  // boundary pins must be represented
}
