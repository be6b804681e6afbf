#pragma once

#include <optional>
#include <string>
#include <variant>

#include "json.hpp"
#include "mwopt/config.hpp"
#include "mwopt/dual_ascent.hpp"
#include "mwopt/queue_multipliers.hpp"

namespace mwopt {

using Json = nlohmann::json;

enum class ExperimentKind { exp_example, fig_q, privacy, custom };

ExperimentKind experiment_kind(const Config& config);

// A fully assembled constrained run: problem, solver parameters, multiplier
// source, inner-solve hooks, and the initial state.
struct BuiltConstrainedExperiment {
  ProblemInstance problem;
  SolverParams params;
  MultiplierSource source;
  RunHooks hooks;
  DescentState initial;
};

// A custom config without constraints boils down to a plain descent run.
struct BuiltUnconstrainedExperiment {
  ProblemInstance problem;
  DescentConfig config;
  DescentState initial;
};

// The paired exact/approximate multiplier tracking experiment.
struct BuiltTrackingExperiment {
  LinearConstraintSystem system;
  ActionSet actions;
  ArrivalModel arrivals;
  TrackingRunConfig config;
  int seeds = 1;
};

// Exponential objective over box corners with componentwise floor
// constraints; drives the shipped runs (dual-gap, bracket sweeps and
// the adversarial perturbation) depending on the [multipliers] section.
BuiltConstrainedExperiment build_exp_example(const Config& config);

// Entropy/average-delay feasibility run over the probability simplex with
// closed-form inner steps and arrival-feedback multipliers.
BuiltConstrainedExperiment build_privacy_example(const Config& config);

// Scalar queue-vs-multiplier tracking pair.
BuiltTrackingExperiment build_fig_q_example(const Config& config);

// User-supplied problem; constrained or unconstrained depending on config.
std::variant<BuiltConstrainedExperiment, BuiltUnconstrainedExperiment>
build_custom_experiment(const Config& config);

struct ExperimentOutcome {
  int exit_code = 0;
  Json summary;
};

// Runs the configured experiment, writes trace CSV(s) plus summary.json under
// out_dir, and returns the summary with the CLI exit code (0 ok, 3 when the
// approximate-multiplier contract was breached).  Deterministic for a fixed
// (config, seed).
ExperimentOutcome run_experiment(const Config& config, const std::string& out_dir,
                                 std::optional<std::uint64_t> seed_override = {},
                                 std::optional<bool> strict_override = {});

// Theoretical brackets and admissibility limits without running.
Json experiment_bounds(const Config& config);

// Reference solves for the configured problem: f* and, when multipliers are
// supplied, q(lambda).
Json experiment_oracle(const Config& config,
                       const std::optional<Vector>& lambda = {});

// Shared helper: numbers that may be non-finite are serialized as strings
// ("inf", "-inf", "nan") because JSON has no non-finite literals.
Json json_number(double value);

}  // namespace mwopt
