#include "mwopt/dual_ascent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mwopt/log.hpp"
#include "mwopt/queue_multipliers.hpp"

namespace mwopt {

namespace {

double linf(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

// L(z, lambda) without the sign restriction on lambda; internal use only
// (approximate multipliers may dip slightly negative under additive noise).
double lagrangian_unchecked(const ProblemInstance& problem, const Vector& z,
                            const Vector& lambda) {
  double value = problem.objective().value(z);
  const Vector g = problem.constraint_values(z);
  return value + lambda.dot(g);
}

// Bracket check with a relative slack so +-inf bounds and large magnitudes
// behave sensibly.
bool within(double x, double lo, double hi) {
  const double slack_lo = 1e-9 * std::max(1.0, std::abs(lo));
  const double slack_hi = 1e-9 * std::max(1.0, std::abs(hi));
  return x >= lo - slack_lo && x <= hi + slack_hi;
}

}  // namespace

double lagrangian_value(const ProblemInstance& problem, const Vector& z,
                        const Vector& lambda) {
  if (!problem.constrained()) {
    throw ValidationError("lagrangian_value: problem has no constraints");
  }
  if (lambda.size() != static_cast<Eigen::Index>(problem.m())) {
    throw ValidationError("lagrangian_value: multiplier size " +
                          std::to_string(lambda.size()) + " does not match " +
                          std::to_string(problem.m()) + " constraints");
  }
  if ((lambda.array() < -kComparisonTol).any()) {
    throw ValidationError("lagrangian_value: multipliers must be nonnegative");
  }
  return lagrangian_unchecked(problem, z, lambda);
}

double slater_margin(const ProblemInstance& problem, bool strict) {
  if (!problem.constrained()) {
    throw ValidationError("slater_margin: problem has no constraints");
  }
  const Vector g = problem.constraint_values(problem.interior_point());
  const double margin = -g.maxCoeff();
  if (!(margin > 0.0)) {
    throw ValidationError(
        "slater_margin: interior point is not strictly feasible (margin " +
        std::to_string(margin) + ")");
  }
  if (strict && margin < 1e-9) {
    throw ValidationError(
        "slater_margin: margin " + std::to_string(margin) +
        " is below the 1e-9 degeneracy floor required in strict mode");
  }
  return margin;
}

double dual_bound_from_slater(const ProblemInstance& problem,
                              const Vector& lambda0, double delta,
                              const OracleOptions& oracle) {
  const double margin = slater_margin(problem, false);
  const double f_interior = problem.objective().value(problem.interior_point());
  const double q0 = reference_dual(problem, lambda0, oracle).value;
  return (f_interior - q0 + delta) / margin;
}

double lambda_bar_requirement(const ProblemInstance& problem, double alpha,
                              double epsilon, double sigma0, double q_ref,
                              double gbar_override) {
  if (!(alpha > 0.0) || !(epsilon > 0.0) || sigma0 < 0.0) {
    throw ValidationError(
        "lambda_bar_requirement: requires alpha > 0, epsilon > 0, sigma0 >= 0");
  }
  const double margin = slater_margin(problem, false);
  const double gbar =
      gbar_override > 0.0 ? gbar_override : max_constraint_magnitude(problem);
  const double m = static_cast<double>(problem.m());
  const double f_interior = problem.objective().value(problem.interior_point());
  const double delta =
      alpha * (m * gbar * gbar / 2.0 + m * m * sigma0 * gbar) + 2.0 * epsilon;
  return 3.0 / margin * (f_interior - q_ref + delta) + alpha * m * gbar;
}

double alpha_bound(double epsilon, double gamma, double gamma1, double beta,
                   int m, double gbar, double sigma0) {
  if (!(epsilon > 0.0)) throw ValidationError("alpha_bound: epsilon must be > 0");
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw ValidationError("alpha_bound: gamma must lie in (0,1)");
  }
  if (!(gamma1 > 0.0 && gamma1 < 0.5)) {
    throw ValidationError("alpha_bound: gamma1 must lie in (0,1/2)");
  }
  if (!(beta > 0.0 && beta <= 1.0)) {
    throw ValidationError("alpha_bound: beta must lie in (0,1]");
  }
  if (m < 1) throw ValidationError("alpha_bound: m must be >= 1");
  if (!(gbar > 0.0)) {
    throw ValidationError("alpha_bound: constraint magnitude must be > 0");
  }
  if (sigma0 < 0.0) throw ValidationError("alpha_bound: sigma0 must be >= 0");
  const double mm = static_cast<double>(m);
  return gamma1 * gamma * beta * epsilon /
         (mm * mm * (gbar * gbar + 2.0 * sigma0 * gbar));
}

MultiplierState multiplier_step(const MultiplierState& state,
                                const Vector& g_value) {
  if (g_value.size() != state.lambda.size()) {
    throw ValidationError("multiplier_step: constraint value size mismatch");
  }
  if (!(state.alpha > 0.0)) {
    throw ValidationError("multiplier_step: alpha must be > 0");
  }
  if (!(state.cap > 0.0)) {
    throw ValidationError("multiplier_step: cap must be > 0");
  }
  MultiplierState next = state;
  next.lambda =
      (state.lambda + state.alpha * g_value).cwiseMax(0.0).cwiseMin(state.cap);
  return next;
}

PrimalStepResult unified_primal_step(const ProblemInstance& problem,
                                     const Vector& z, const Vector& lambda,
                                     double beta, PrimalMode mode, double tol) {
  if (!problem.constrained()) {
    throw ValidationError("unified_primal_step: problem has no constraints");
  }
  if ((lambda.array() < -kComparisonTol).any()) {
    throw ValidationError("unified_primal_step: multipliers must be nonnegative");
  }
  if (!(beta > 0.0 && beta <= 1.0)) {
    throw ValidationError("unified_primal_step: beta must lie in (0,1]");
  }
  const Vector lam = lambda.cwiseMax(0.0);

  auto composed_value = [&](const Vector& x) {
    const Vector w = (1.0 - beta) * z + beta * x;
    return lagrangian_unchecked(problem, w, lam);
  };

  PrimalStepResult discrete;
  if (mode == PrimalMode::discrete || mode == PrimalMode::hybrid) {
    const auto& points = problem.actions().points();
    std::size_t best = 0;
    double best_value = composed_value(points[0]);
    for (std::size_t i = 1; i < points.size(); ++i) {
      const double v = composed_value(points[i]);
      if (v < best_value) {
        best_value = v;
        best = i;
      }
    }
    discrete.x = points[best];
    discrete.action_index = best;
    discrete.objective = best_value;
    if (mode == PrimalMode::discrete) return discrete;
  }

  // Continuous inner problem over the hull, in the x variable.
  ConvexFunctionSpec inner;
  inner.name = "composed_lagrangian";
  inner.value = composed_value;
  inner.subgradient = [&problem, &lam, &z, beta](const Vector& x) {
    const Vector w = (1.0 - beta) * z + beta * x;
    Vector grad = problem.objective().subgradient(w);
    for (std::size_t j = 0; j < static_cast<std::size_t>(problem.m()); ++j) {
      grad += lam[static_cast<Eigen::Index>(j)] *
              problem.constraints().components[j].subgradient(w);
    }
    return Vector(beta * grad);
  };

  OracleOptions options;
  options.tolerance = tol;
  const ReferenceSolution hull = minimize_over_hull(inner, problem.actions(), options);

  PrimalStepResult continuous;
  continuous.x = hull.argpoint;
  continuous.objective = hull.value;
  if (mode == PrimalMode::convex_hull) return continuous;
  // Hybrid: ties prefer the vertex so the chosen point stays in D.
  return continuous.objective < discrete.objective ? continuous : discrete;
}

std::pair<double, double> bound_main(long long k, double alpha, double epsilon,
                                     double sigma0, double lambda_bar,
                                     double gbar, int m) {
  if (k < 1) throw ValidationError("bound_main: k must be >= 1");
  if (!(alpha > 0.0)) throw ValidationError("bound_main: alpha must be > 0");
  const double mm = static_cast<double>(m);
  const double kk = static_cast<double>(k);
  const double cap_term = mm * lambda_bar * lambda_bar / (alpha * kk);
  const double step_cost = mm * gbar * gbar;
  const double noise_cost = mm * mm * sigma0 * gbar;
  const double lower =
      -2.0 * cap_term - alpha * (step_cost / 2.0 + noise_cost) - 2.0 * epsilon;
  const double upper =
      2.0 * epsilon + alpha * (step_cost + noise_cost) + 1.5 * cap_term;
  return {lower, upper};
}

std::pair<double, double> bound_slackness(long long k, double alpha,
                                          double lambda_bar, double gbar,
                                          int m) {
  if (k < 1) throw ValidationError("bound_slackness: k must be >= 1");
  if (!(alpha > 0.0)) throw ValidationError("bound_slackness: alpha must be > 0");
  const double mm = static_cast<double>(m);
  const double kk = static_cast<double>(k);
  const double cap_term = mm * lambda_bar * lambda_bar / (alpha * kk);
  const double lower = -cap_term / 2.0 - alpha / 2.0 * mm * gbar * gbar;
  return {lower, cap_term};
}

double feasibility_cap(long long k, double alpha, double lambda_bar) {
  if (k < 1) throw ValidationError("feasibility_cap: k must be >= 1");
  if (!(alpha > 0.0)) throw ValidationError("feasibility_cap: alpha must be > 0");
  return lambda_bar / (alpha * static_cast<double>(k));
}

std::pair<double, double> bound_lagrangian_average(long long k, double alpha,
                                                   double epsilon,
                                                   double lambda_bar,
                                                   double gbar, int m) {
  if (k < 1) throw ValidationError("bound_lagrangian_average: k must be >= 1");
  if (!(alpha > 0.0)) {
    throw ValidationError("bound_lagrangian_average: alpha must be > 0");
  }
  const double mm = static_cast<double>(m);
  const double kk = static_cast<double>(k);
  const double radius = 2.0 * epsilon + alpha / 2.0 * mm * gbar * gbar +
                        mm * lambda_bar * lambda_bar / (alpha * kk);
  return {-radius, radius};
}

BoundReport bound_report(long long k, double alpha, double epsilon,
                         double sigma0, double lambda_bar, double gbar, int m) {
  BoundReport report;
  std::tie(report.main_lower, report.main_upper) =
      bound_main(k, alpha, epsilon, sigma0, lambda_bar, gbar, m);
  std::tie(report.slackness_lower, report.slackness_upper) =
      bound_slackness(k, alpha, lambda_bar, gbar, m);
  report.feasibility_caps =
      Vector::Constant(m, feasibility_cap(k, alpha, lambda_bar));
  std::tie(report.lag_avg_lower, report.lag_avg_upper) =
      bound_lagrangian_average(k, alpha, epsilon, lambda_bar, gbar, m);
  return report;
}

namespace {

void validate_run_inputs(const ProblemInstance& problem,
                         const SolverParams& params,
                         const MultiplierSource& source) {
  if (!problem.constrained()) {
    throw ValidationError("run_constrained: problem has no constraints");
  }
  if (!(params.epsilon > 0.0)) {
    throw ValidationError("run_constrained: epsilon must be > 0");
  }
  if (!(params.gamma > 0.0 && params.gamma < 1.0)) {
    throw ValidationError("run_constrained: gamma must lie in (0,1)");
  }
  if (!(params.gamma1 > 0.0 && params.gamma1 < 0.5)) {
    throw ValidationError("run_constrained: gamma1 must lie in (0,1/2)");
  }
  if (!(params.beta > 0.0 && params.beta <= 1.0)) {
    throw ValidationError("run_constrained: beta must lie in (0,1]");
  }
  if (!(params.alpha > 0.0)) {
    throw ValidationError("run_constrained: alpha must be > 0");
  }
  if (!(params.lambda_cap > 0.0)) {
    throw ValidationError("run_constrained: lambda_cap must be > 0");
  }
  if (params.sigma0 < 0.0 || !std::isfinite(params.sigma0)) {
    throw ValidationError("run_constrained: sigma0 must be finite and >= 0");
  }
  if (params.max_iterations < 1) {
    throw ValidationError("run_constrained: max_iterations must be >= 1");
  }
  if (params.checkpoint_every < 1 || params.trace_every < 1 ||
      params.confirmation_window < 1) {
    throw ValidationError(
        "run_constrained: checkpoint_every, trace_every and "
        "confirmation_window must be >= 1");
  }
  const auto m = static_cast<Eigen::Index>(problem.m());
  if (params.lambda_init.size() != 0 && params.lambda_init.size() != m) {
    throw ValidationError("run_constrained: lambda_init size mismatch");
  }
  if (params.lambda_init.size() == m) {
    if ((params.lambda_init.array() < 0.0).any() ||
        (params.lambda_init.array() > params.lambda_cap).any()) {
      throw ValidationError(
          "run_constrained: lambda_init must lie in [0, lambda_cap]");
    }
  }
  switch (source.kind) {
    case MultiplierSource::Kind::perturbed:
      if (!source.perturb) {
        throw ValidationError(
            "run_constrained: perturbed source requires a perturb hook");
      }
      break;
    case MultiplierSource::Kind::recursive:
      if (!source.advance) {
        throw ValidationError(
            "run_constrained: recursive source requires an advance hook");
      }
      break;
    case MultiplierSource::Kind::queue: {
      const auto n = static_cast<Eigen::Index>(problem.dimension());
      if (source.A.rows() != m || source.A.cols() != n) {
        throw ValidationError("run_constrained: queue source matrix must be m x n");
      }
      if (source.b_mean.size() != m) {
        throw ValidationError("run_constrained: queue source mean size mismatch");
      }
      break;
    }
    case MultiplierSource::Kind::exact:
      break;
  }
}

}  // namespace

ConstrainedRunResult run_constrained(const ProblemInstance& problem,
                                     const SolverParams& params,
                                     const MultiplierSource& source,
                                     const RunHooks& hooks,
                                     DescentState* initial) {
  validate_run_inputs(problem, params, source);

  const std::size_t m = problem.m();
  const auto mi = static_cast<Eigen::Index>(m);
  const auto& actions = problem.actions();
  const auto& points = actions.points();

  ConstrainedRunResult result;
  result.gbar_computed =
      max_constraint_magnitude(problem, {problem.interior_point()});
  result.gbar_used =
      params.gbar_declared > 0.0 ? params.gbar_declared : result.gbar_computed;
  if (params.gbar_declared > 0.0 &&
      std::abs(params.gbar_declared - result.gbar_computed) >
          1e-9 * std::max(1.0, result.gbar_computed)) {
    log::warn("run_constrained: declared constraint magnitude ",
              params.gbar_declared, " differs from computed ",
              result.gbar_computed, "; bounds use the declared value");
  }

  result.alpha_limit =
      alpha_bound(params.epsilon, params.gamma, params.gamma1, params.beta,
                  static_cast<int>(m), result.gbar_used, params.sigma0);
  const double mu_L =
      lagrangian_curvature(problem.objective().curvature,
                           problem.constraints().curvatures(), params.lambda_cap);
  const double xbar = params.xbar > 0.0 ? params.xbar : diameter(actions);
  result.beta_limit = beta_bound(params.epsilon, params.gamma, mu_L, xbar);
  result.alpha_within_limit = params.alpha <= result.alpha_limit * (1.0 + 1e-12);
  result.beta_within_limit = params.beta <= result.beta_limit * (1.0 + 1e-12);
  result.drift_limit = params.alpha * result.gbar_computed;

  if (!result.alpha_within_limit) {
    if (params.strict) {
      throw ValidationError("run_constrained: alpha " +
                            std::to_string(params.alpha) +
                            " exceeds the admissible step bound " +
                            std::to_string(result.alpha_limit));
    }
    log::warn("run_constrained: alpha ", params.alpha,
              " exceeds the admissible bound ", result.alpha_limit,
              "; continuing (non-strict)");
  }
  if (!result.beta_within_limit) {
    if (params.strict) {
      throw ValidationError("run_constrained: beta " +
                            std::to_string(params.beta) +
                            " exceeds the admissible smoothing bound " +
                            std::to_string(result.beta_limit));
    }
    log::warn("run_constrained: beta ", params.beta,
              " exceeds the admissible bound ", result.beta_limit,
              "; continuing (non-strict)");
  }
  if (params.strict) slater_margin(problem, true);

  // --- state ---------------------------------------------------------------
  DescentState state = initial != nullptr
                           ? *initial
                           : make_vertex_state(actions, 0, params.beta);
  state.beta = params.beta;
  Rng rng(params.seed);

  MultiplierState mult;
  mult.lambda = params.lambda_init.size() == mi ? params.lambda_init
                                                : Vector::Zero(mi).eval();
  mult.cap = params.lambda_cap;
  mult.alpha = params.alpha;

  Vector lambda_tilde_state = mult.lambda;  // recursive source state
  QueueState queue;
  Vector arrival_partial_sum = Vector::Zero(mi);
  if (source.kind == MultiplierSource::Kind::queue) {
    queue.q = mult.lambda / params.alpha;
    queue.cap = params.lambda_cap / params.alpha;
    queue.alpha = params.alpha;
  }

  // Candidate averaging window (promoted once the gap stays compliant for
  // `confirmation_window` consecutive evaluations).
  Vector cand_z = Vector::Zero(actions.dimension());
  Vector cand_lambda = Vector::Zero(mi);
  Vector cand_tilde = Vector::Zero(mi);
  long long cand_start = -1, cand_count = 0, streak = 0;
  bool confirmed = false;

  DiamondAverages& avg = result.averages;
  avg.z_sum = Vector::Zero(actions.dimension());
  avg.lambda_sum = Vector::Zero(mi);
  avg.lambda_tilde_sum = Vector::Zero(mi);

  const double contract_threshold = params.alpha * params.sigma0 + 1e-12;
  const double gap_threshold = 2.0 * params.epsilon + 1e-12;
  double last_gap = std::numeric_limits<double>::quiet_NaN();

  result.trace.reserve(static_cast<std::size_t>(
      std::min<long long>(params.max_iterations / params.trace_every + 2,
                          1 << 20)));

  for (long long k = 1; k <= params.max_iterations; ++k) {
    const Vector lambda_k = mult.lambda;

    // Approximate multipliers in use this iteration.
    Vector lambda_tilde;
    switch (source.kind) {
      case MultiplierSource::Kind::exact:
        lambda_tilde = lambda_k;
        break;
      case MultiplierSource::Kind::perturbed:
        lambda_tilde = source.perturb(lambda_k, k, rng);
        break;
      case MultiplierSource::Kind::recursive:
        lambda_tilde = lambda_tilde_state;
        break;
      case MultiplierSource::Kind::queue:
        lambda_tilde = queue.lambda_tilde();
        break;
    }
    if (lambda_tilde.size() != mi) {
      throw ValidationError(
          "run_constrained: multiplier source returned a wrong-size vector");
    }

    const double contract_gap = linf(lambda_tilde - lambda_k);
    result.max_contract_gap = std::max(result.max_contract_gap, contract_gap);
    const bool contract_ok = contract_gap <= contract_threshold;
    if (!contract_ok) {
      if (result.contract_violations == 0) {
        result.first_contract_violation_k = k;
        log::warn("run_constrained: approximate multipliers left the declared "
                  "band at k=", k, " (gap ", contract_gap, " > ",
                  contract_threshold, ")");
      }
      ++result.contract_violations;
    }

    // Inner step and smoothing average.
    Vector x_point;
    std::optional<std::size_t> x_index;
    if (hooks.inner_point) {
      x_point = hooks.inner_point(state.z, lambda_tilde, params.beta);
      if (x_point.size() != state.z.size()) {
        throw ValidationError("run_constrained: inner-point hook size mismatch");
      }
    } else if (params.update_rule == UpdateRule::direct) {
      std::size_t best = 0;
      double best_value = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < points.size(); ++i) {
        const Vector w = (1.0 - params.beta) * state.z + params.beta * points[i];
        const double v = lagrangian_unchecked(problem, w, lambda_tilde);
        if (!std::isfinite(v)) {
          throw ValidationError(
              "run_constrained: non-finite inner objective at action " +
              std::to_string(i));
        }
        if (v < best_value) {
          best_value = v;
          best = i;
        }
      }
      x_index = best;
      x_point = points[best];
    } else {
      Vector w = problem.objective().subgradient(state.z);
      for (std::size_t j = 0; j < m; ++j) {
        w += lambda_tilde[static_cast<Eigen::Index>(j)] *
             problem.constraints().components[j].subgradient(state.z);
      }
      std::size_t best = 0;
      double best_score = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < points.size(); ++i) {
        const double s = w.dot(points[i]);
        if (s < best_score) {
          best_score = s;
          best = i;
        }
      }
      x_index = best;
      x_point = points[best];
    }

    Vector z_next = (1.0 - params.beta) * state.z + params.beta * x_point;
    const Vector g_next = problem.constraint_values(z_next);

    // Exact clipped ascent (always driven by the true constraint values).
    const MultiplierState mult_next = multiplier_step(mult, g_next);
    result.max_multiplier_drift = std::max(
        result.max_multiplier_drift, linf(mult_next.lambda - lambda_k));

    // Advance the approximate-multiplier state for the next iteration.
    switch (source.kind) {
      case MultiplierSource::Kind::recursive:
        lambda_tilde_state = source.advance(lambda_tilde_state, z_next, g_next,
                                            k, rng);
        if (lambda_tilde_state.size() != mi) {
          throw ValidationError(
              "run_constrained: advance hook returned a wrong-size vector");
        }
        break;
      case MultiplierSource::Kind::queue: {
        const Vector b_k = source.arrivals ? source.arrivals(k, rng)
                                           : source.b_mean;
        queue = queue_step(queue, source.A, x_point, b_k);
        arrival_partial_sum += b_k - source.b_mean;
        if (source.sigma2_claim &&
            linf(arrival_partial_sum) > *source.sigma2_claim + 1e-9) {
          if (result.sigma2_breaches == 0) {
            log::warn("run_constrained: realized arrivals exceeded the "
                      "declared partial-sum deviation at k=", k);
          }
          ++result.sigma2_breaches;
        }
        break;
      }
      default:
        break;
    }

    // Dual-gap bookkeeping: every iteration until the burn-in window is
    // confirmed, then at checkpoints.
    const bool at_checkpoint = (k % params.checkpoint_every) == 0;
    double lagrangian_at_tilde =
        std::numeric_limits<double>::quiet_NaN();  // shared with the trace row
    if (!confirmed || at_checkpoint) {
      lagrangian_at_tilde = lagrangian_unchecked(problem, z_next, lambda_tilde);
      const double q_value =
          hooks.dual_value ? hooks.dual_value(lambda_tilde)
                           : reference_dual(problem, lambda_tilde, params.oracle)
                                 .value;
      last_gap = lagrangian_at_tilde - q_value;
      if (params.f_star && source.kind == MultiplierSource::Kind::exact &&
          q_value > *params.f_star + 1e-8) {
        ++result.weak_duality_violations;
      }
      const bool compliant = last_gap <= gap_threshold;
      if (!confirmed) {
        if (compliant) {
          if (result.kbar_first_hit < 0) result.kbar_first_hit = k;
          if (streak == 0) {
            cand_start = k;
            cand_count = 0;
            cand_z.setZero();
            cand_lambda.setZero();
            cand_tilde.setZero();
          }
          ++streak;
        } else {
          streak = 0;
          cand_start = -1;
        }
      } else if (!compliant) {
        ++result.gap_breaches_after_confirmation;
      }
    }

    // Averaging-window accumulation (z_{k+1}, lambda_k, lambda_tilde_k).
    if (confirmed) {
      avg.z_sum += z_next;
      avg.lambda_sum += lambda_k;
      avg.lambda_tilde_sum += lambda_tilde;
      ++avg.count;
    } else if (cand_start > 0) {
      cand_z += z_next;
      cand_lambda += lambda_k;
      cand_tilde += lambda_tilde;
      ++cand_count;
      if (streak >= params.confirmation_window) {
        confirmed = true;
        result.kbar_confirmed = cand_start;
        avg.window_start = cand_start;
        avg.z_sum = cand_z;
        avg.lambda_sum = cand_lambda;
        avg.lambda_tilde_sum = cand_tilde;
        avg.count = cand_count;
      }
    }

    // Realized-vs-theoretical checks on the averages.
    bool main_ok = true, slack_ok = true, feas_ok = true;
    double f_diamond = 0.0, slack_value = 0.0, feas_max = 0.0, feas_cap_k = 0.0;
    double main_lo = 0.0, main_hi = 0.0, slack_lo = 0.0, slack_hi = 0.0;
    if (confirmed && avg.count > 0) {
      const Vector z_diamond = avg.z_diamond();
      const Vector lambda_diamond = avg.lambda_diamond();
      const Vector g_diamond = problem.constraint_values(z_diamond);
      f_diamond = problem.objective().value(z_diamond);
      std::tie(main_lo, main_hi) = bound_main(
          avg.count, params.alpha, params.epsilon, params.sigma0,
          params.lambda_cap, result.gbar_used, static_cast<int>(m));
      std::tie(slack_lo, slack_hi) =
          bound_slackness(avg.count, params.alpha, params.lambda_cap,
                          result.gbar_used, static_cast<int>(m));
      feas_cap_k = feasibility_cap(avg.count, params.alpha, params.lambda_cap);

      if (params.f_star) {
        main_ok = within(f_diamond - *params.f_star, main_lo, main_hi);
        if (!main_ok) {
          if (result.main_violations == 0) result.first_main_violation_k = k;
          ++result.main_violations;
        }
        const double lag_diamond =
            lagrangian_unchecked(problem, z_diamond, lambda_diamond);
        const auto lag_bounds = bound_lagrangian_average(
            avg.count, params.alpha, params.epsilon, params.lambda_cap,
            result.gbar_used, static_cast<int>(m));
        if (!within(lag_diamond - *params.f_star, lag_bounds.first,
                    lag_bounds.second)) {
          ++result.lag_avg_violations;
        }
      }
      slack_value = lambda_diamond.dot(g_diamond);
      slack_ok = within(slack_value, slack_lo, slack_hi);
      if (!slack_ok) ++result.slackness_violations;
      feas_max = g_diamond.maxCoeff();
      feas_ok = feas_max <= feas_cap_k + 1e-9 * std::max(1.0, feas_cap_k);
      if (!feas_ok) ++result.feasibility_violations;
    }

    // Sparse trace.
    if (k == 1 || (k % params.trace_every) == 0 || k == params.max_iterations) {
      ConstrainedTraceRow row;
      row.k = k;
      row.z = z_next;
      row.lambda = mult_next.lambda;
      row.lambda_tilde = lambda_tilde;
      row.lagrangian = std::isfinite(lagrangian_at_tilde)
                           ? lagrangian_at_tilde
                           : lagrangian_unchecked(problem, z_next, lambda_tilde);
      row.dual_gap = last_gap;
      row.averaging_count = confirmed ? avg.count : 0;
      row.window_active = confirmed;
      row.f_diamond = f_diamond;
      row.main_lower = main_lo;
      row.main_upper = main_hi;
      row.slack_value = slack_value;
      row.slack_lower = slack_lo;
      row.slack_upper = slack_hi;
      row.feas_max = feas_max;
      row.feas_cap = feas_cap_k;
      row.contract_ok = contract_ok;
      row.main_ok = main_ok;
      row.slack_ok = slack_ok;
      row.feas_ok = feas_ok;
      result.trace.push_back(std::move(row));
    }

    // Commit the iteration.
    if (x_index && !state.hull_weights.empty()) {
      state = average_update(state, *x_index, actions);
    } else {
      state.z = std::move(z_next);
      state.k += 1;
      state.hull_weights.clear();
    }
    mult = mult_next;
  }

  result.final_multipliers = mult;
  result.final_z = state.z;
  result.final_dual_gap = last_gap;
  return result;
}

}  // namespace mwopt
