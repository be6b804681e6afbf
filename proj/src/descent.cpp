#include "mwopt/descent.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "mwopt/log.hpp"

namespace mwopt {
namespace {

void check_beta(double beta) {
  if (!(beta > 0.0) || !(beta <= 1.0)) {
    throw ValidationError("beta must lie in (0, 1]");
  }
}

void validate_config(const DescentConfig& config) {
  if (!(config.epsilon > 0.0)) throw ValidationError("epsilon must be > 0");
  if (!(config.gamma > 0.0 && config.gamma < 1.0)) {
    throw ValidationError("gamma must lie in (0, 1)");
  }
  if (!(config.gamma1 > 0.0 && config.gamma1 < 0.5)) {
    throw ValidationError("gamma1 must lie in (0, 1/2)");
  }
  if (config.max_iterations < 1) {
    throw ValidationError("max_iterations must be >= 1");
  }
}

}  // namespace

DescentState make_vertex_state(const ActionSet& actions, std::size_t index,
                               double beta) {
  check_beta(beta);
  if (index >= actions.size()) throw ValidationError("vertex index out of range");
  DescentState state;
  state.z = actions.point(index);
  state.beta = beta;
  state.hull_weights.assign(actions.size(), 0.0);
  state.hull_weights[index] = 1.0;
  return state;
}

DescentState make_hull_state(const ActionSet& actions, Vector z,
                             std::vector<double> weights, double beta) {
  check_beta(beta);
  if (weights.size() != actions.size()) {
    throw ValidationError("hull state needs one weight per action");
  }
  double sum = 0.0;
  Vector reconstructed = Vector::Zero(actions.dimension());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] < -kComparisonTol) {
      throw ValidationError("hull weights must be nonnegative");
    }
    weights[i] = std::max(weights[i], 0.0);
    sum += weights[i];
    reconstructed += weights[i] * actions.point(i);
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ValidationError("hull weights must sum to 1");
  }
  if ((reconstructed - z).norm() > kMembershipTol) {
    throw ValidationError("hull weights do not reproduce the starting point");
  }
  DescentState state;
  state.z = std::move(z);
  state.beta = beta;
  state.hull_weights = std::move(weights);
  return state;
}

double beta_bound(double epsilon, double gamma, double mu_F, double xbar_D) {
  if (!(epsilon > 0.0)) throw ValidationError("epsilon must be > 0");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ValidationError("gamma must lie in (0, 1)");
  if (!(mu_F >= 0.0)) throw ValidationError("curvature must be >= 0");
  if (!(xbar_D > 0.0)) throw ValidationError("set radius must be > 0");
  const double curvature_term =
      mu_F == 0.0 ? std::numeric_limits<double>::infinity()
                  : epsilon / (mu_F * xbar_D * xbar_D);
  return (1.0 - gamma) * std::min(curvature_term, 1.0);
}

std::size_t greedy_direct_step(const ConvexFunctionSpec& F,
                               const DescentState& state,
                               const ActionSet& actions) {
  std::size_t best_index = 0;
  double best_value = std::numeric_limits<double>::infinity();
  const double keep = 1.0 - state.beta;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const Vector candidate = keep * state.z + state.beta * actions.point(i);
    const double value = F.value(candidate);
    if (!std::isfinite(value)) {
      std::ostringstream os;
      os << "objective '" << F.name << "' is non-finite at candidate action " << i;
      throw ValidationError(os.str());
    }
    if (value < best_value) {
      best_value = value;
      best_index = i;
    }
  }
  return best_index;
}

std::size_t frank_wolfe_step(const ConvexFunctionSpec& F,
                             const DescentState& state,
                             const ActionSet& actions) {
  const Vector grad = F.subgradient(state.z);
  if (!grad.allFinite()) {
    throw ValidationError("subgradient of '" + F.name + "' is non-finite");
  }
  std::size_t best_index = 0;
  double best_score = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const double score = grad.dot(actions.point(i));
    if (score < best_score) {
      best_score = score;
      best_index = i;
    }
  }
  return best_index;
}

DescentState average_update(const DescentState& state, std::size_t action_index,
                            const ActionSet& actions) {
  if (action_index >= actions.size()) {
    throw ValidationError("action index out of range");
  }
  DescentState next;
  next.beta = state.beta;
  next.k = state.k + 1;
  next.z = (1.0 - state.beta) * state.z + state.beta * actions.point(action_index);
  next.hull_weights.resize(state.hull_weights.size());
  for (std::size_t i = 0; i < state.hull_weights.size(); ++i) {
    next.hull_weights[i] = (1.0 - state.beta) * state.hull_weights[i];
  }
  next.hull_weights[action_index] += state.beta;
  return next;
}

UnconstrainedRunResult run_unconstrained(const ProblemInstance& problem,
                                         const DescentConfig& config,
                                         DescentState initial, double xbar) {
  validate_config(config);
  check_beta(initial.beta);
  if (problem.constrained()) {
    throw ValidationError("unconstrained run requires a problem without constraints");
  }

  UnconstrainedRunResult result;
  result.beta_used = initial.beta;
  result.beta_limit =
      beta_bound(config.epsilon, config.gamma, problem.objective().curvature, xbar);
  result.beta_within_limit = initial.beta <= result.beta_limit + kComparisonTol;
  if (!result.beta_within_limit) {
    std::ostringstream os;
    os << "beta " << initial.beta << " exceeds the admissible step bound "
       << result.beta_limit;
    if (config.strict) throw ValidationError(os.str());
    log::warn(os.str());
  }

  DescentState state = std::move(initial);
  result.trace.reserve(static_cast<std::size_t>(config.max_iterations) + 1);
  result.trace.push_back({state.k, state.z, problem.objective().value(state.z)});
  for (long long iter = 0; iter < config.max_iterations; ++iter) {
    const std::size_t choice =
        config.update_rule == UpdateRule::direct
            ? greedy_direct_step(problem.objective(), state, problem.actions())
            : frank_wolfe_step(problem.objective(), state, problem.actions());
    state = average_update(state, choice, problem.actions());
    result.trace.push_back({state.k, state.z, problem.objective().value(state.z)});
  }
  result.final_value = result.trace.back().f;
  result.final_state = std::move(state);
  return result;
}

}  // namespace mwopt
