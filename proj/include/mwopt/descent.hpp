#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "mwopt/problem.hpp"

namespace mwopt {

enum class UpdateRule { direct, frank_wolfe };

// Rolling state of the smoothed greedy descent z_{k+1} = (1-beta) z_k + beta x_k.
// The convex-combination weights of z over the action set are carried along,
// so hull membership is maintained structurally and can be re-verified.
struct DescentState {
  Vector z;
  long long k = 1;
  double beta = 0.0;
  std::vector<double> hull_weights;
};

// Builds a state whose starting point is a vertex of the action set.
DescentState make_vertex_state(const ActionSet& actions, std::size_t index,
                               double beta);

// Builds a state from an arbitrary hull point with explicit weights
// (validated to reproduce z within the membership tolerance).
DescentState make_hull_state(const ActionSet& actions, Vector z,
                             std::vector<double> weights, double beta);

struct DescentConfig {
  double epsilon = 0.0;      // target accuracy, > 0
  double gamma = 0.5;        // in (0,1)
  double gamma1 = 0.4;       // in (0,1/2)
  long long max_iterations = 0;
  UpdateRule update_rule = UpdateRule::direct;
  bool strict = false;       // reject (vs warn about) an out-of-bound beta
  long long confirmation_window = 100;  // consecutive compliant checks for kbar
};

// Step-size admissibility: (1-gamma) * min{epsilon / (mu_F * xbar^2), 1}.
// mu_F = 0 (linear case) yields (1-gamma), independent of epsilon.
double beta_bound(double epsilon, double gamma, double mu_F, double xbar_D);

// One greedy step: index minimizing F((1-beta) z + beta x) over the actions,
// ties to the lowest index.
std::size_t greedy_direct_step(const ConvexFunctionSpec& F,
                               const DescentState& state,
                               const ActionSet& actions);

// One linearized step: index minimizing subgradient(z)'x, ties to the lowest
// index.  Attains the linear minimum over the whole hull (vertex optimality).
std::size_t frank_wolfe_step(const ConvexFunctionSpec& F,
                             const DescentState& state,
                             const ActionSet& actions);

// z' = (1-beta) z + beta x, k+1, weights updated alike.
DescentState average_update(const DescentState& state, std::size_t action_index,
                            const ActionSet& actions);

struct UnconstrainedTraceRow {
  long long k;
  Vector z;
  double f;
};

struct UnconstrainedRunResult {
  std::vector<UnconstrainedTraceRow> trace;  // every iteration
  DescentState final_state;
  double final_value = 0.0;
  double beta_used = 0.0;
  double beta_limit = 0.0;
  bool beta_within_limit = true;
};

// Iterates the configured step + average for max_iterations from `initial`.
// `beta` on the state must be set; xbar is the radius/diameter used for the
// admissibility check (pass the value matching the chosen convention).
UnconstrainedRunResult run_unconstrained(const ProblemInstance& problem,
                                         const DescentConfig& config,
                                         DescentState initial, double xbar);

// A slowly-varying objective family F_k with an optional certified bound on
// sup-norm differences |F_{k+1} - F_k| over the hull (caller obligation).
struct TimeVaryingObjective {
  std::function<ConvexFunctionSpec(long long k)> at;
  std::function<double(long long k)> sup_difference;  // optional certificate
};

}  // namespace mwopt
