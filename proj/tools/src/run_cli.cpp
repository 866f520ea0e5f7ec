#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>

#include "utep/cli/commands.hpp"

namespace utep::cli {

namespace {

void configure_logging() {
  static const bool once = [] {
    spdlog::set_default_logger(spdlog::stderr_color_mt("utep"));
    spdlog::set_pattern("[%l] %v");
    return true;
  }();
  (void)once;
  const char* env = std::getenv("UTEP_LOG_LEVEL");
  const std::string level = env ? env : "info";
  if (level == "error") {
    spdlog::set_level(spdlog::level::err);
  } else if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    spdlog::set_level(spdlog::level::info);
    if (level != "info") spdlog::warn("UTEP_LOG_LEVEL '{}' not one of error, info, debug; using info", level);
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  configure_logging();
  CLI::App app{"Uncertainty-weighted adversarial domain adaptation experiments"};
  app.require_subcommand(1);

  RunOptions run;
  std::uint64_t run_seed = 0;
  std::string run_out;
  auto* run_cmd = app.add_subcommand("run", "Train one configuration");
  run_cmd->add_option("--config", run.config, "Config file (key = value)")->required();
  auto* run_seed_opt = run_cmd->add_option("--seed", run_seed, "Override the config seed");
  auto* run_out_opt = run_cmd->add_option("--out", run_out, "Output directory");
  run_cmd->add_flag("--dump-uncertainty", run.dump_uncertainty, "Write per-sample u, mu, s and pseudo labels");

  SweepOptions sweep;
  std::uint64_t sweep_seed = 0;
  auto* sweep_cmd = app.add_subcommand("sweep", "Grid of runs over key=v1,v2 overrides");
  sweep_cmd->add_option("--config", sweep.config, "Base config file")->required();
  sweep_cmd->add_option("--out", sweep.out, "Sweep output directory");
  sweep_cmd->add_option("--jobs", sweep.jobs, "Concurrent runs")->check(CLI::PositiveNumber);
  auto* sweep_seed_opt = sweep_cmd->add_option("--seed", sweep_seed, "Override the base seed");
  sweep_cmd->add_flag("--ablation", sweep.ablation, "Cross with the seven component variants");
  sweep_cmd->add_option("overrides", sweep.overrides, "key=v1,v2 ...");

  std::size_t trials = 10000;
  std::uint64_t theory_seed = 1;
  std::string flip;
  auto* theory_cmd = app.add_subcommand("verify-theory", "Check the bound chain on random finite instances");
  theory_cmd->add_option("--trials", trials, "Instances per check")->check(CLI::PositiveNumber);
  theory_cmd->add_option("--seed", theory_seed, "Instance generator seed");
  theory_cmd->add_option("--flip-check", flip)->group("");  // test hook

  std::uint64_t grad_seed = 1;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every op and the total loss");
  grad_cmd->add_option("--seed", grad_seed, "Seed for probe points");

  RunOptions gen;
  std::uint64_t gen_seed = 0;
  std::string gen_out = "dataset.csv";
  auto* gen_cmd = app.add_subcommand("gen-data", "Write the configured dataset pair as CSV");
  gen_cmd->add_option("--config", gen.config, "Config file")->required();
  auto* gen_seed_opt = gen_cmd->add_option("--seed", gen_seed, "Override the config seed");
  gen_cmd->add_option("--out", gen_out, "CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (*run_cmd) {
    if (*run_seed_opt) run.seed = run_seed;
    if (*run_out_opt) run.out = run_out;
    return cmd_run(run, err);
  }
  if (*sweep_cmd) {
    if (*sweep_seed_opt) sweep.seed = sweep_seed;
    return cmd_sweep(sweep, out, err);
  }
  if (*theory_cmd) {
    try {
      return cmd_verify_theory(trials, theory_seed, flip, out);
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return kExitConfig;
    }
  }
  if (*grad_cmd) return cmd_gradcheck(grad_seed, out);
  if (*gen_cmd) {
    if (*gen_seed_opt) gen.seed = gen_seed;
    return cmd_gen_data(gen, gen_out, err);
  }
  return kExitConfig;
}

}  // namespace utep::cli
