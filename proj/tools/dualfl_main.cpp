// Command-line harness: configured runs of the federated engine, the dual
// solver, baselines, the duality cross-check, rho sweeps, and regularized
// runs. Exit codes: 0 success, 1 convergence target or check not met,
// 2 configuration/data error.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dualfl/runner.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::optional<long> rounds;
  std::optional<int> threads;
};

void attach_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "run configuration file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", args.out_path, "trace output path");
  cmd->add_option("--seed", args.seed, "override run.seed");
  cmd->add_option("--rounds", args.rounds, "override run.rounds");
  cmd->add_option("--threads", args.threads, "override run.threads");
}

int run_command(const CommonArgs& args,
                const std::optional<dualfl::RunMode>& forced_mode) {
  dualfl::RunConfig config = dualfl::load_run_config(args.config_path);
  if (forced_mode) config.mode = *forced_mode;
  if (args.seed) {
    config.seed = *args.seed;
    config.problem.seed = *args.seed;
  }
  if (args.rounds) config.rounds = *args.rounds;
  if (args.threads) config.threads = *args.threads;
  if (!args.out_path.empty()) config.out_path = args.out_path;

  const dualfl::RunOutcome outcome = dualfl::execute(config);
  if (!config.out_path.empty()) {
    for (const auto& [suffix, trace] : outcome.traces) {
      dualfl::emit_trace(trace, config.out_path + suffix);
    }
  }
  std::cout << outcome.message << "\n";
  return outcome.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"federated dual-optimization simulator"};
  app.require_subcommand(1);

  CommonArgs run_args, verify_args, sweep_args, reg_args, baseline_args;

  CLI::App* cmd_run = app.add_subcommand(
      "run", "engine or dual-solver run (run.mode from the config)");
  attach_common(cmd_run, run_args);

  CLI::App* cmd_verify =
      app.add_subcommand("verify-duality", "engine vs dual solver cross-check");
  attach_common(cmd_verify, verify_args);

  CLI::App* cmd_sweep = app.add_subcommand("sweep-rho", "repeat the run over rho values");
  attach_common(cmd_sweep, sweep_args);

  CLI::App* cmd_reg =
      app.add_subcommand("regularized-run", "run on the l2-regularized problem");
  attach_common(cmd_reg, reg_args);

  CLI::App* cmd_baseline =
      app.add_subcommand("baseline", "gradient-descent or fedavg baseline");
  attach_common(cmd_baseline, baseline_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (cmd_run->parsed()) {
      dualfl::RunConfig probe = dualfl::load_run_config(run_args.config_path);
      if (probe.mode != dualfl::RunMode::dualfl &&
          probe.mode != dualfl::RunMode::dual_fista) {
        throw dualfl::ConfigError(
            "the run subcommand covers run.mode dualfl or dual_fista; use the "
            "dedicated subcommand instead");
      }
      return run_command(run_args, std::nullopt);
    }
    if (cmd_verify->parsed()) {
      return run_command(verify_args, dualfl::RunMode::verify_duality);
    }
    if (cmd_sweep->parsed()) {
      return run_command(sweep_args, dualfl::RunMode::sweep_rho);
    }
    if (cmd_reg->parsed()) {
      return run_command(reg_args, dualfl::RunMode::regularized);
    }
    if (cmd_baseline->parsed()) {
      dualfl::RunConfig probe = dualfl::load_run_config(baseline_args.config_path);
      dualfl::RunMode mode = probe.mode;
      if (mode != dualfl::RunMode::baseline_gd &&
          mode != dualfl::RunMode::baseline_fedavg) {
        mode = dualfl::RunMode::baseline_gd;
      }
      return run_command(baseline_args, mode);
    }
  } catch (const dualfl::NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
