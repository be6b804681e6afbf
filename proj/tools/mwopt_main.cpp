// mwopt: greedy primal averaging with dual multiplier updates over finite
// action sets.  Subcommands:
//   run       execute a configured experiment, write trace.csv + summary.json
//   bounds    print admissibility limits and theoretical brackets
//   oracle    print certified reference values (f*, optionally q(lambda))
//   validate  build the configured experiment and report resolved parameters
//
// Exit codes: 0 success, 1 configuration/validation error, 2 oracle or
// internal failure, 3 run completed but a multiplier-contract violation was
// detected.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mwopt/config.hpp"
#include "mwopt/experiments.hpp"
#include "mwopt/types.hpp"

namespace {

mwopt::Config load_config(const std::string& path,
                          const std::vector<std::string>& overrides) {
  mwopt::Config config = mwopt::Config::parse_file(path);
  for (const auto& entry : overrides) config.apply_override(entry);
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Greedy descent over finite action sets with averaged dual multiplier "
      "updates"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::string lambda_text;
  std::vector<std::string> overrides;
  long long seed = 0;
  bool strict = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Path to the experiment configuration")
        ->required();
    cmd->add_option("--set", overrides,
                    "Override a configuration entry as section.key=value "
                    "(repeatable)");
  };

  CLI::App* run_cmd = app.add_subcommand(
      "run", "Execute the configured experiment and write its outputs");
  add_common(run_cmd);
  run_cmd->add_option("--out", out_dir, "Output directory (default: out)");
  CLI::Option* seed_opt =
      run_cmd->add_option("--seed", seed, "Override solver.seed");
  CLI::Option* strict_opt = run_cmd->add_flag(
      "--strict", strict,
      "Escalate parameter-admissibility warnings to hard errors");

  CLI::App* bounds_cmd = app.add_subcommand(
      "bounds", "Print admissibility limits and theoretical brackets");
  add_common(bounds_cmd);

  CLI::App* oracle_cmd = app.add_subcommand(
      "oracle", "Print certified reference values for the configured problem");
  add_common(oracle_cmd);
  oracle_cmd->add_option(
      "--lambda", lambda_text,
      "Comma-separated multipliers; additionally reports q(lambda)");

  CLI::App* validate_cmd = app.add_subcommand(
      "validate",
      "Build the configured experiment and report resolved parameters "
      "without running it");
  add_common(validate_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (run_cmd->parsed()) {
      const mwopt::Config config = load_config(config_path, overrides);
      std::optional<std::uint64_t> seed_override;
      if (seed_opt->count() > 0) {
        if (seed < 0) throw mwopt::ValidationError("--seed must be >= 0");
        seed_override = static_cast<std::uint64_t>(seed);
      }
      std::optional<bool> strict_override;
      if (strict_opt->count() > 0) strict_override = true;
      const mwopt::ExperimentOutcome outcome =
          mwopt::run_experiment(config, out_dir, seed_override, strict_override);
      std::cout << outcome.summary.dump(2) << "\n";
      return outcome.exit_code;
    }
    if (bounds_cmd->parsed()) {
      const mwopt::Config config = load_config(config_path, overrides);
      std::cout << mwopt::experiment_bounds(config).dump(2) << "\n";
      return 0;
    }
    if (oracle_cmd->parsed()) {
      const mwopt::Config config = load_config(config_path, overrides);
      std::optional<mwopt::Vector> lambda;
      if (!lambda_text.empty()) {
        lambda = mwopt::parse_vector(lambda_text, "--lambda");
      }
      std::cout << mwopt::experiment_oracle(config, lambda).dump(2) << "\n";
      return 0;
    }
    if (validate_cmd->parsed()) {
      // Building the experiment performs every structural check (strict
      // feasibility, hull membership, parameter sanity); the bounds report
      // doubles as the resolved-parameter listing.
      const mwopt::Config config = load_config(config_path, overrides);
      mwopt::Json report = mwopt::experiment_bounds(config);
      report["config"] = config_path;
      report["valid"] = true;
      std::cout << report.dump(2) << "\n";
      return 0;
    }
    return 0;
  } catch (const mwopt::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const mwopt::OracleFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
