#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "mwopt/descent.hpp"
#include "mwopt/oracle.hpp"
#include "mwopt/problem.hpp"
#include "mwopt/rng.hpp"

namespace mwopt {

// Clipped multiplier state: 0 <= lambda_j <= cap at every iteration.
struct MultiplierState {
  Vector lambda;
  double cap = 0.0;    // may be +inf
  double alpha = 0.0;  // ascent step
};

// Running means of the iterates over the averaging window that starts at the
// detected burn-in kbar.  All bound checks apply to these averages.
struct DiamondAverages {
  Vector z_sum, lambda_sum, lambda_tilde_sum;
  long long window_start = -1;  // kbar; -1 while not yet detected
  long long count = 0;

  bool active() const { return window_start > 0 && count > 0; }
  Vector z_diamond() const { return z_sum / static_cast<double>(count); }
  Vector lambda_diamond() const { return lambda_sum / static_cast<double>(count); }
  Vector lambda_tilde_diamond() const {
    return lambda_tilde_sum / static_cast<double>(count);
  }
};

// Theoretical brackets at averaging count k.
struct BoundReport {
  double main_lower = 0.0, main_upper = 0.0;
  double slackness_lower = 0.0, slackness_upper = 0.0;
  Vector feasibility_caps;
  double lag_avg_lower = 0.0, lag_avg_upper = 0.0;
};

// f(z) + lambda'g(z).  Requires lambda >= 0 (the dual interpretation).
double lagrangian_value(const ProblemInstance& problem, const Vector& z,
                        const Vector& lambda);

// Strict-feasibility margin of the interior point: min_j -g_j(interior).
// Errors when not strictly positive; in strict mode, also when below the
// 1e-9 degeneracy floor.
double slater_margin(const ProblemInstance& problem, bool strict = true);

// Multiplier-norm bound that needs no optimal value:
// (1/margin) * (f(interior) - q(lambda0) + delta), with q evaluated by the
// reference dual solve.
double dual_bound_from_slater(const ProblemInstance& problem,
                              const Vector& lambda0, double delta,
                              const OracleOptions& oracle = {});

// Minimal admissible multiplier cap:
// (3/margin) * (f(interior) - q_ref + delta) + alpha*m*gbar, where
// delta = alpha*(m*gbar^2/2 + m^2*sigma0*gbar) + 2*epsilon.
// q_ref is the reference dual value at the best known multipliers (or any
// lower bound on it).  gbar_override > 0 replaces the computed magnitude.
double lambda_bar_requirement(const ProblemInstance& problem, double alpha,
                              double epsilon, double sigma0, double q_ref,
                              double gbar_override = 0.0);

// Dual step-size admissibility:
// gamma1*gamma*beta*epsilon / (m^2 * (gbar^2 + 2*sigma0*gbar)).
double alpha_bound(double epsilon, double gamma, double gamma1, double beta,
                   int m, double gbar, double sigma0);

// lambda' = clip(lambda + alpha*g, [0, cap]) componentwise.
MultiplierState multiplier_step(const MultiplierState& state,
                                const Vector& g_value);

enum class PrimalMode { discrete, convex_hull, hybrid };

struct PrimalStepResult {
  Vector x;                               // chosen point (vertex or hull point)
  std::optional<std::size_t> action_index;  // set when x is a vertex
  double objective = 0.0;                 // L((1-beta) z + beta x, lambda)
};

// Inner minimization of L((1-beta) z + beta x, lambda) over x in D
// (discrete), over the hull (convex_hull, certified to `tol`), or the better
// of the two (hybrid; ties prefer the vertex).
PrimalStepResult unified_primal_step(const ProblemInstance& problem,
                                     const Vector& z, const Vector& lambda,
                                     double beta, PrimalMode mode,
                                     double tol = 1e-8);

// --- bound formulas ---------------------------------------------------------
std::pair<double, double> bound_main(long long k, double alpha, double epsilon,
                                     double sigma0, double lambda_bar,
                                     double gbar, int m);
std::pair<double, double> bound_slackness(long long k, double alpha,
                                          double lambda_bar, double gbar, int m);
double feasibility_cap(long long k, double alpha, double lambda_bar);
std::pair<double, double> bound_lagrangian_average(long long k, double alpha,
                                                   double epsilon,
                                                   double lambda_bar,
                                                   double gbar, int m);
BoundReport bound_report(long long k, double alpha, double epsilon,
                         double sigma0, double lambda_bar, double gbar, int m);

// --- constrained run --------------------------------------------------------

struct SolverParams {
  double epsilon = 0.0;
  double gamma = 0.5;
  double gamma1 = 0.4;
  double beta = 0.0;
  double alpha = 0.0;
  double lambda_cap = 0.0;
  double sigma0 = 0.0;
  long long max_iterations = 0;
  Vector lambda_init;           // defaults to zeros
  UpdateRule update_rule = UpdateRule::direct;
  bool strict = false;
  long long checkpoint_every = 100;   // dual-gap checkpoints after burn-in
  long long confirmation_window = 100;  // consecutive compliant gap checks
  long long trace_every = 100;
  double gbar_declared = 0.0;   // 0 = use the computed magnitude in bounds
  double xbar = 0.0;            // 0 = strict diameter convention
  std::optional<double> f_star;  // enables realized bracket checks
  std::uint64_t seed = 1;
  OracleOptions oracle;
};

// Where the approximate multipliers come from.
struct MultiplierSource {
  enum class Kind { exact, perturbed, recursive, queue };
  Kind kind = Kind::exact;

  // perturbed (memoryless): lambda_tilde_k = perturb(lambda_k, k, rng),
  // evaluated fresh at the start of every iteration.
  std::function<Vector(const Vector& lambda, long long k, Rng& rng)> perturb;

  // recursive: lambda_tilde_1 = lambda_1, then after each primal update
  // lambda_tilde_{k+1} = advance(lambda_tilde_k, z_{k+1}, g(z_{k+1}), k, rng).
  std::function<Vector(const Vector& lambda_tilde, const Vector& z_next,
                       const Vector& g_next, long long k, Rng& rng)>
      advance;

  // queue: lambda_tilde_k = alpha * Q_k with
  // Q_{k+1} = clip(Q_k + A x_k - b_k, [0, cap/alpha]).
  Matrix A;
  Vector b_mean;
  std::function<Vector(long long k, Rng& rng)> arrivals;
  std::optional<double> sigma2_claim;  // asserted along the realized arrivals

  static MultiplierSource exact() { return {}; }
};

// Optional overrides for the run's inner solves.
struct RunHooks {
  // Replaces the reference dual solve in gap evaluations.
  std::function<double(const Vector& lambda_tilde)> dual_value;
  // Continuous inner step returning a hull point (instead of enumerating D).
  std::function<Vector(const Vector& z, const Vector& lambda_tilde, double beta)>
      inner_point;
};

struct ConstrainedTraceRow {
  long long k = 0;
  Vector z;              // z_{k+1}
  Vector lambda;         // lambda_{k+1}
  Vector lambda_tilde;   // lambda_tilde_k
  double lagrangian = 0.0;   // L(z_{k+1}, lambda_tilde_k)
  double dual_gap = 0.0;     // gap at the most recent evaluation
  long long averaging_count = 0;  // 0 while the window is not active
  double f_diamond = 0.0;
  double main_lower = 0.0, main_upper = 0.0;
  double slack_value = 0.0, slack_lower = 0.0, slack_upper = 0.0;
  double feas_max = 0.0, feas_cap = 0.0;
  bool window_active = false;
  bool contract_ok = true;
  bool main_ok = true, slack_ok = true, feas_ok = true;
};

struct ConstrainedRunResult {
  std::vector<ConstrainedTraceRow> trace;
  DiamondAverages averages;
  MultiplierState final_multipliers;
  Vector final_z;

  long long kbar_first_hit = -1;
  long long kbar_confirmed = -1;

  long long main_violations = 0;
  long long slackness_violations = 0;
  long long feasibility_violations = 0;
  long long lag_avg_violations = 0;
  long long contract_violations = 0;
  long long gap_breaches_after_confirmation = 0;
  long long weak_duality_violations = 0;
  long long sigma2_breaches = 0;

  long long first_main_violation_k = -1;
  long long first_contract_violation_k = -1;

  double max_multiplier_drift = 0.0;  // max |lambda_{k+1}-lambda_k|_inf
  double drift_limit = 0.0;           // alpha * computed gbar
  double max_contract_gap = 0.0;      // max |lambda_tilde-lambda|_inf
  double final_dual_gap = 0.0;

  double gbar_computed = 0.0;
  double gbar_used = 0.0;
  double alpha_limit = 0.0;
  double beta_limit = 0.0;
  bool alpha_within_limit = true;
  bool beta_within_limit = true;

  bool contract_violated() const { return contract_violations > 0 || sigma2_breaches > 0; }
};

// Executes the constrained loop: inner step with lambda_tilde_k, smoothing
// average, exact clipped multiplier ascent with g(z_{k+1}); detects burn-in
// by a confirmation window on the dual gap; maintains diamond averages and
// realized-vs-theoretical bound flags at every iteration.
ConstrainedRunResult run_constrained(const ProblemInstance& problem,
                                     const SolverParams& params,
                                     const MultiplierSource& source,
                                     const RunHooks& hooks = {},
                                     DescentState* initial = nullptr);

}  // namespace mwopt
