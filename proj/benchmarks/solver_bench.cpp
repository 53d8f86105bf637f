// Copyright (c) barrier-blo contributors
#include <benchmark/benchmark.h>

#include <random>

#include <barrier_blo/oracles.hpp>
#include <barrier_blo/problems.hpp>
#include <barrier_blo/solver.hpp>

using namespace bblo;

namespace {

QcqpInstance instance_of_dim(int dim) {
  std::mt19937_64 rng(static_cast<std::uint64_t>(dim));
  QcqpInstanceOptions opts;
  opts.min_dim = dim;
  opts.max_dim = dim;
  return random_feasible_instance(rng, opts);
}

void BM_SolveDirectionClosedForm(benchmark::State& state) {
  const QcqpInstance inst = instance_of_dim(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_direction(inst.eval, inst.params));
  }
}
BENCHMARK(BM_SolveDirectionClosedForm)->RangeMultiplier(4)->Range(8, 512);

void BM_QcqpBisectionOracle(benchmark::State& state) {
  const QcqpInstance inst = instance_of_dim(static_cast<int>(state.range(0)));
  const double tol = 1e-12 * qcqp_scale(inst.eval, inst.params);
  for (auto _ : state) {
    benchmark::DoNotOptimize(qcqp_oracle(inst.eval, inst.params, tol));
  }
}
BENCHMARK(BM_QcqpBisectionOracle)->RangeMultiplier(4)->Range(8, 128);

void BM_SyntheticEvaluate(benchmark::State& state) {
  const auto problem = make_synthetic(1);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(40);
  for (int i = 0; i < 40; ++i) z(i) = normal(rng);
  const Iterate iterate(z, 20, 20);
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate(*problem, iterate));
  }
}
BENCHMARK(BM_SyntheticEvaluate);

void BM_SyntheticSolve100(benchmark::State& state) {
  const auto problem = make_synthetic(1);
  SolverConfig cfg;
  cfg.max_iter = 100;
  cfg.tol_dz = 0.0;
  const Iterate z0 = init_feasible(*problem, Iterate::zero(20, 20), cfg.eps, 0.1, 5000);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve(*problem, z0, cfg));
  }
  state.SetItemsProcessed(state.iterations() * cfg.max_iter);
}
BENCHMARK(BM_SyntheticSolve100)->Unit(benchmark::kMillisecond);

void BM_DhcEvaluate(benchmark::State& state) {
  DhcSpec spec;
  spec.seed = 3;
  const auto problem = make_dhc(spec);
  const Dims dims = problem->dims();
  const Iterate z = Iterate::zero(dims.n, dims.m);
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate(*problem, z));
  }
}
BENCHMARK(BM_DhcEvaluate);

void BM_HypergradientCg(benchmark::State& state) {
  DhcSpec spec;
  spec.seed = 3;
  const auto problem = make_dhc(spec);
  const Dims dims = problem->dims();
  const Iterate z = Iterate::zero(dims.n, dims.m);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        exact_hypergradient(*problem, z, 1e-10, HypergradMethod::kConjugateGradient));
  }
}
BENCHMARK(BM_HypergradientCg);

}  // namespace

BENCHMARK_MAIN();
