#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mwopt/action_set.hpp"
#include "mwopt/convex_function.hpp"
#include "mwopt/problem.hpp"
#include "mwopt/rng.hpp"
#include "mwopt/types.hpp"

namespace mwopt {

// Discrete queue occupancies acting as scaled multipliers: lambda_tilde = alpha*Q.
struct QueueState {
  Vector q;            // occupancies, componentwise in [0, cap]
  double cap = 0.0;    // lambda_cap / alpha; +inf means uncapped
  double alpha = 0.0;  // scale linking lambda_tilde = alpha * q

  Vector lambda_tilde() const { return alpha * q; }
};

// Linear constraints A z - b <= 0 plus the arrival stream feeding the queues.
struct LinearConstraintSystem {
  Matrix A;
  Vector b;
};

// g_j(z) = a_j' z - b_j, all curvatures zero.
ConstraintVector to_constraints(const LinearConstraintSystem& system);

// Arrival stream b_k.  Pull-based and seeded: a run is reproducible from
// (model, seed).
struct ArrivalModel {
  enum class Kind { constant, deterministic_sequence, iid_choice, custom };
  Kind kind = Kind::constant;
  Vector mean;  // the true b

  // deterministic_sequence: cycles through `sequence`.
  std::vector<Vector> sequence;
  // iid_choice: uniform draw among `sequence` entries each step.
  // custom: arbitrary generator.
  std::function<Vector(long long k, Rng& rng)> generator;

  std::optional<double> sigma2_claim;  // bound on max_k |sum (b_i - b)|_j

  Vector draw(long long k, Rng& rng) const;

  static ArrivalModel constant(Vector b);
  static ArrivalModel alternating(std::vector<Vector> cycle, Vector mean,
                                  std::optional<double> sigma2 = {});
};

// Random next action given the chosen one; rows of `transition` index the
// chosen action, columns the realized one.
struct StochasticActionModel {
  Matrix transition;  // |D| x |D|, row-stochastic
  explicit StochasticActionModel(Matrix transition_matrix);
};

// Q' = clip(Q + A x - b_k, [0, cap]) componentwise.
QueueState queue_step(const QueueState& state, const Matrix& A, const Vector& x,
                      const Vector& b_k);

// Value after iterating lambda_{i+1} = max(lambda_i + delta_i, 0) from
// lambda1, computed in closed form: sum(delta) + max(Theta, lambda1) with
// Theta = -min over prefixes of the running delta sum.
double clipped_accumulator_closed_form(double lambda1,
                                       const std::vector<double>& deltas);

// 2*m*alpha*(sigma1/beta + sigma2).
double tracking_gap_bound(double alpha, double beta, double sigma1,
                          double sigma2, int m);

// sigma1 = 2 * max over x in D of |A x|_inf (vertex enumeration).
double sigma1_bound(const Matrix& A, const ActionSet& actions);

struct SequenceGapReport {
  double eps_hat = 0.0;   // max_k |sum of (delta_i - delta_tilde_i)|
  double max_gap = 0.0;   // max_k |lambda_k - lambda_tilde_k|
  bool within_double_eps = false;  // max_gap <= 2*eps_hat (+ tolerance)
};

// Certifies the clipped-accumulator tracking relation on realized scalar
// traces: both must start at the same value and use the same cap.
SequenceGapReport sequence_gap_check(const std::vector<double>& lambda_trace,
                                     const std::vector<double>& lambda_tilde_trace,
                                     const std::vector<double>& deltas,
                                     const std::vector<double>& deltas_tilde);

// argmin over x in D of f((1-beta) z + beta x) + alpha*beta*Q'(A x);
// lowest index wins ties.
std::size_t queue_action_direct(const ProblemInstance& problem, const Vector& z,
                                const QueueState& queue, double beta,
                                const Matrix& A);

// argmin over x in D of df(z)'x + alpha*Q'(A x); lowest index wins ties.
std::size_t queue_action_fw(const ProblemInstance& problem, const Vector& z,
                            const QueueState& queue, const Matrix& A);

// Per-component max over k of |sum_{i<=k} (b_i - mean)_j|.
Vector partial_sum_deviation(const std::vector<Vector>& arrivals,
                             const Vector& mean);

// Probability-weighted realized action for a chosen one:
// ybar(x) = sum_y y * p_{x,y}.
Vector expected_action(const StochasticActionModel& model,
                       const ActionSet& actions, std::size_t action_index);

// --- paired exact/approximate multiplier run -------------------------------
//
// Runs the two clipped recursions side by side on one realized stream:
//   exact:       lambda_{k+1} = clip(lambda_k + alpha*(A z_{k+1} - b), [0,cap])
//   approximate: lambda_tilde_{k+1} = clip(lambda_tilde_k + alpha*(A x_k - b_k), [0,cap])
// with z_{k+1} = (1-beta) z_k + beta x_k and x_k drawn by `pick_action`.

struct TrackingRunConfig {
  double alpha = 0.0;
  double beta = 0.0;
  double lambda_cap = std::numeric_limits<double>::infinity();
  long long steps = 0;
  std::uint64_t seed = 1;
  long long trace_every = 1;
};

struct TrackingTraceRow {
  long long k = 0;
  Vector lambda, lambda_tilde;
  double gap = 0.0;  // |lambda_tilde - lambda|_2
};

struct TrackingRunResult {
  std::vector<TrackingTraceRow> trace;
  double max_gap = 0.0;
  double final_gap = 0.0;
  double bound = 0.0;          // tracking_gap_bound at the realized sigma2 claim
  double sigma1 = 0.0;
  Vector realized_deviation;   // partial-sum deviation of the arrivals
  bool within_bound = false;
  bool sigma2_breached = false;
};

TrackingRunResult run_tracking_pair(
    const LinearConstraintSystem& system, const ActionSet& actions,
    const ArrivalModel& arrivals, const TrackingRunConfig& config,
    const std::function<std::size_t(long long k, Rng& rng)>& pick_action,
    const Vector* z_init = nullptr);

}  // namespace mwopt
