// Copyright (c) barrier-blo contributors
#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "barrier_blo_cli/commands.hpp"
#include "barrier_blo_cli/config.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  int jobs = 1;
  std::int64_t seed_override = -1;
  bool has_seed_override = false;
};

void add_common_options(CLI::App* sub, CommonArgs* args) {
  sub->add_option("--config", args->config_path, "experiment configuration file")
      ->required();
  sub->add_option("--out", args->out_dir,
                  "output directory (BARRIER_BLO_OUT overrides this flag)");
  sub->add_option("--jobs", args->jobs, "max concurrent runs")->check(CLI::PositiveNumber);
  sub->add_option("--seed-override", args->seed_override,
                  "run only this seed instead of the configured list")
      ->check(CLI::NonNegativeNumber);
}

bblo::cli::RunOptions make_options(const CLI::App* sub, const CommonArgs& args) {
  bblo::cli::RunOptions opts;
  opts.out_override = args.out_dir;
  opts.jobs = args.jobs;
  if (sub->count("--seed-override") > 0) {
    opts.seed_override = static_cast<std::uint64_t>(args.seed_override);
  }
  return opts;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anytime-feasible bilevel solver harness"};
  app.require_subcommand(1);

  CommonArgs solve_args, ablate_args, gradcheck_args, compare_args;
  CLI::App* solve = app.add_subcommand("solve", "run the solver per configured seed");
  add_common_options(solve, &solve_args);
  CLI::App* ablate = app.add_subcommand("ablate", "sweep the tilting parameter grid");
  add_common_options(ablate, &ablate_args);
  CLI::App* gradcheck =
      app.add_subcommand("gradcheck", "finite-difference checks of the problem oracles");
  add_common_options(gradcheck, &gradcheck_args);
  CLI::App* compare =
      app.add_subcommand("compare", "barrier solver vs. double-loop baseline traces");
  add_common_options(compare, &compare_args);

  long long selftest_count = 1000;
  std::uint64_t selftest_seed = 0;
  CLI::App* selftest = app.add_subcommand(
      "qcqp-selftest", "closed-form direction vs. dual-bisection oracle on random instances");
  selftest->add_option("--count", selftest_count, "number of random instances");
  selftest->add_option("--seed", selftest_seed, "instance generator seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (selftest->parsed()) {
      return bblo::cli::cmd_qcqp_selftest(selftest_count, selftest_seed);
    }
    if (solve->parsed()) {
      const auto cfg = bblo::cli::ExperimentConfig::load(solve_args.config_path);
      return bblo::cli::cmd_solve(cfg, make_options(solve, solve_args));
    }
    if (ablate->parsed()) {
      const auto cfg = bblo::cli::ExperimentConfig::load(ablate_args.config_path);
      return bblo::cli::cmd_ablate(cfg, make_options(ablate, ablate_args));
    }
    if (gradcheck->parsed()) {
      const auto cfg = bblo::cli::ExperimentConfig::load(gradcheck_args.config_path);
      return bblo::cli::cmd_gradcheck(cfg, make_options(gradcheck, gradcheck_args));
    }
    if (compare->parsed()) {
      const auto cfg = bblo::cli::ExperimentConfig::load(compare_args.config_path);
      return bblo::cli::cmd_compare(cfg, make_options(compare, compare_args));
    }
  } catch (const bblo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return bblo::cli::kExitConfigError;
  } catch (const bblo::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return bblo::cli::kExitCheckFailure;
  }
  return bblo::cli::kExitConfigError;
}
