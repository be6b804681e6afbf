#include "mwopt/queue_multipliers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mwopt {

ConstraintVector to_constraints(const LinearConstraintSystem& system) {
  if (system.A.rows() < 1) {
    throw ValidationError("to_constraints: system must have at least one row");
  }
  if (system.b.size() != system.A.rows()) {
    throw ValidationError("to_constraints: b size does not match A rows");
  }
  ConstraintVector g;
  for (Eigen::Index j = 0; j < system.A.rows(); ++j) {
    const Vector row = system.A.row(j).transpose();
    const double offset = system.b[j];
    ConvexFunctionSpec component;
    component.name = "linear_constraint_" + std::to_string(j + 1);
    component.curvature = 0.0;
    component.value = [row, offset](const Vector& z) {
      return row.dot(z) - offset;
    };
    component.subgradient = [row](const Vector&) { return row; };
    g.components.push_back(std::move(component));
  }
  return g;
}

Vector ArrivalModel::draw(long long k, Rng& rng) const {
  switch (kind) {
    case Kind::constant:
      return mean;
    case Kind::deterministic_sequence: {
      if (sequence.empty()) {
        throw ValidationError("ArrivalModel: deterministic sequence is empty");
      }
      return sequence[static_cast<std::size_t>((k - 1) %
                                               static_cast<long long>(
                                                   sequence.size()))];
    }
    case Kind::iid_choice: {
      if (sequence.empty()) {
        throw ValidationError("ArrivalModel: iid choice set is empty");
      }
      return sequence[rng.uniform_index(sequence.size())];
    }
    case Kind::custom:
      if (!generator) {
        throw ValidationError("ArrivalModel: custom kind requires a generator");
      }
      return generator(k, rng);
  }
  throw ValidationError("ArrivalModel: unknown kind");
}

ArrivalModel ArrivalModel::constant(Vector b) {
  ArrivalModel model;
  model.kind = Kind::constant;
  model.mean = std::move(b);
  model.sigma2_claim = 0.0;
  return model;
}

ArrivalModel ArrivalModel::alternating(std::vector<Vector> cycle, Vector mean,
                                       std::optional<double> sigma2) {
  ArrivalModel model;
  model.kind = Kind::deterministic_sequence;
  model.sequence = std::move(cycle);
  model.mean = std::move(mean);
  model.sigma2_claim = sigma2;
  return model;
}

StochasticActionModel::StochasticActionModel(Matrix transition_matrix)
    : transition(std::move(transition_matrix)) {
  if (transition.rows() != transition.cols() || transition.rows() < 1) {
    throw ValidationError("StochasticActionModel: transition must be square");
  }
  for (Eigen::Index r = 0; r < transition.rows(); ++r) {
    double row_sum = 0.0;
    for (Eigen::Index c = 0; c < transition.cols(); ++c) {
      if (transition(r, c) < 0.0) {
        throw ValidationError(
            "StochasticActionModel: probabilities must be nonnegative");
      }
      row_sum += transition(r, c);
    }
    if (std::abs(row_sum - 1.0) > kComparisonTol) {
      throw ValidationError("StochasticActionModel: row " + std::to_string(r) +
                            " sums to " + std::to_string(row_sum) +
                            ", expected 1");
    }
  }
}

QueueState queue_step(const QueueState& state, const Matrix& A, const Vector& x,
                      const Vector& b_k) {
  if (A.cols() != x.size() || A.rows() != state.q.size() ||
      b_k.size() != state.q.size()) {
    throw ValidationError("queue_step: dimension mismatch");
  }
  QueueState next = state;
  next.q = (state.q + A * x - b_k).cwiseMax(0.0).cwiseMin(state.cap);
  return next;
}

double clipped_accumulator_closed_form(double lambda1,
                                       const std::vector<double>& deltas) {
  double running = 0.0;
  double min_prefix = std::numeric_limits<double>::infinity();
  for (const double d : deltas) {
    running += d;
    min_prefix = std::min(min_prefix, running);
  }
  if (deltas.empty()) return lambda1;
  const double theta = -min_prefix;
  return running + std::max(theta, lambda1);
}

double tracking_gap_bound(double alpha, double beta, double sigma1,
                          double sigma2, int m) {
  if (!(alpha > 0.0)) throw ValidationError("tracking_gap_bound: alpha must be > 0");
  if (!(beta > 0.0 && beta <= 1.0)) {
    throw ValidationError("tracking_gap_bound: beta must lie in (0,1]");
  }
  if (sigma1 < 0.0 || sigma2 < 0.0) {
    throw ValidationError("tracking_gap_bound: deviations must be >= 0");
  }
  if (m < 1) throw ValidationError("tracking_gap_bound: m must be >= 1");
  return 2.0 * static_cast<double>(m) * alpha * (sigma1 / beta + sigma2);
}

double sigma1_bound(const Matrix& A, const ActionSet& actions) {
  if (A.cols() != static_cast<Eigen::Index>(actions.dimension())) {
    throw ValidationError("sigma1_bound: matrix width must match action dimension");
  }
  double worst = 0.0;
  for (const auto& x : actions.points()) {
    worst = std::max(worst, (A * x).cwiseAbs().maxCoeff());
  }
  return 2.0 * worst;
}

SequenceGapReport sequence_gap_check(const std::vector<double>& lambda_trace,
                                     const std::vector<double>& lambda_tilde_trace,
                                     const std::vector<double>& deltas,
                                     const std::vector<double>& deltas_tilde) {
  if (lambda_trace.size() != lambda_tilde_trace.size() ||
      deltas.size() != deltas_tilde.size()) {
    throw ValidationError("sequence_gap_check: traces of unequal length");
  }
  SequenceGapReport report;
  double running = 0.0;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    running += deltas[i] - deltas_tilde[i];
    report.eps_hat = std::max(report.eps_hat, std::abs(running));
  }
  for (std::size_t i = 0; i < lambda_trace.size(); ++i) {
    report.max_gap =
        std::max(report.max_gap, std::abs(lambda_trace[i] - lambda_tilde_trace[i]));
  }
  report.within_double_eps = report.max_gap <= 2.0 * report.eps_hat + 1e-12;
  return report;
}

std::size_t queue_action_direct(const ProblemInstance& problem, const Vector& z,
                                const QueueState& queue, double beta,
                                const Matrix& A) {
  if (!(beta > 0.0 && beta <= 1.0)) {
    throw ValidationError("queue_action_direct: beta must lie in (0,1]");
  }
  const auto& points = problem.actions().points();
  const Vector penalty = queue.alpha * beta * (A.transpose() * queue.q);
  std::size_t best = 0;
  double best_value = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Vector w = (1.0 - beta) * z + beta * points[i];
    const double v = problem.objective().value(w) + penalty.dot(points[i]);
    if (!std::isfinite(v)) {
      throw ValidationError("queue_action_direct: non-finite value at action " +
                            std::to_string(i));
    }
    if (v < best_value) {
      best_value = v;
      best = i;
    }
  }
  return best;
}

std::size_t queue_action_fw(const ProblemInstance& problem, const Vector& z,
                            const QueueState& queue, const Matrix& A) {
  const auto& points = problem.actions().points();
  const Vector weight =
      problem.objective().subgradient(z) + queue.alpha * (A.transpose() * queue.q);
  std::size_t best = 0;
  double best_value = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double v = weight.dot(points[i]);
    if (v < best_value) {
      best_value = v;
      best = i;
    }
  }
  return best;
}

Vector partial_sum_deviation(const std::vector<Vector>& arrivals,
                             const Vector& mean) {
  Vector running = Vector::Zero(mean.size());
  Vector worst = Vector::Zero(mean.size());
  for (const auto& b : arrivals) {
    if (b.size() != mean.size()) {
      throw ValidationError("partial_sum_deviation: arrival size mismatch");
    }
    running += b - mean;
    worst = worst.cwiseMax(running.cwiseAbs());
  }
  return worst;
}

Vector expected_action(const StochasticActionModel& model,
                       const ActionSet& actions, std::size_t action_index) {
  if (model.transition.rows() != static_cast<Eigen::Index>(actions.size())) {
    throw ValidationError(
        "expected_action: transition size does not match the action set");
  }
  if (action_index >= actions.size()) {
    throw ValidationError("expected_action: action index out of range");
  }
  Vector out = Vector::Zero(actions.dimension());
  for (std::size_t y = 0; y < actions.size(); ++y) {
    const double p = model.transition(static_cast<Eigen::Index>(action_index),
                                      static_cast<Eigen::Index>(y));
    if (p > 0.0) out += p * actions.point(y);
  }
  return out;
}

TrackingRunResult run_tracking_pair(
    const LinearConstraintSystem& system, const ActionSet& actions,
    const ArrivalModel& arrivals, const TrackingRunConfig& config,
    const std::function<std::size_t(long long k, Rng& rng)>& pick_action,
    const Vector* z_init) {
  if (config.steps < 1) {
    throw ValidationError("run_tracking_pair: steps must be >= 1");
  }
  if (!(config.alpha > 0.0)) {
    throw ValidationError("run_tracking_pair: alpha must be > 0");
  }
  if (!(config.beta > 0.0 && config.beta <= 1.0)) {
    throw ValidationError("run_tracking_pair: beta must lie in (0,1]");
  }
  if (!pick_action) {
    throw ValidationError("run_tracking_pair: an action picker is required");
  }
  const Eigen::Index m = system.A.rows();
  if (system.b.size() != m) {
    throw ValidationError("run_tracking_pair: b size does not match A rows");
  }

  TrackingRunResult result;
  result.sigma1 = sigma1_bound(system.A, actions);
  const double sigma2 = arrivals.sigma2_claim.value_or(0.0);
  result.bound = tracking_gap_bound(config.alpha, config.beta, result.sigma1,
                                    sigma2, static_cast<int>(m));

  Rng rng(config.seed);
  Vector z = z_init != nullptr ? *z_init : actions.point(0);
  Vector lambda = Vector::Zero(m);
  Vector lambda_tilde = Vector::Zero(m);
  Vector running_deviation = Vector::Zero(m);
  result.realized_deviation = Vector::Zero(m);

  const double cap = config.lambda_cap;
  for (long long k = 1; k <= config.steps; ++k) {
    const std::size_t idx = pick_action(k, rng);
    if (idx >= actions.size()) {
      throw ValidationError("run_tracking_pair: picked action out of range");
    }
    const Vector& x = actions.point(idx);
    const Vector b_k = arrivals.draw(k, rng);
    if (b_k.size() != m) {
      throw ValidationError("run_tracking_pair: arrival size mismatch");
    }

    z = (1.0 - config.beta) * z + config.beta * x;
    lambda = (lambda + config.alpha * (system.A * z - system.b))
                 .cwiseMax(0.0)
                 .cwiseMin(cap);
    lambda_tilde = (lambda_tilde + config.alpha * (system.A * x - b_k))
                       .cwiseMax(0.0)
                       .cwiseMin(cap);

    running_deviation += b_k - system.b;
    result.realized_deviation =
        result.realized_deviation.cwiseMax(running_deviation.cwiseAbs());

    const double gap = (lambda_tilde - lambda).norm();
    result.max_gap = std::max(result.max_gap, gap);
    result.final_gap = gap;

    if (k == 1 || (k % config.trace_every) == 0 || k == config.steps) {
      TrackingTraceRow row;
      row.k = k;
      row.lambda = lambda;
      row.lambda_tilde = lambda_tilde;
      row.gap = gap;
      result.trace.push_back(std::move(row));
    }
  }

  result.within_bound = result.max_gap <= result.bound + 1e-9;
  result.sigma2_breached =
      arrivals.sigma2_claim &&
      result.realized_deviation.maxCoeff() > *arrivals.sigma2_claim + 1e-9;
  return result;
}

}  // namespace mwopt
