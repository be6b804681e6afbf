// Multiplier updates, admissibility limits, theorem brackets and the
// constrained runner (averaging window, dual gap, violation accounting).

#include <cmath>

#include "doctest.h"
#include "mwopt/dual_ascent.hpp"
#include "mwopt/oracle.hpp"
#include "mwopt/rng.hpp"

using namespace mwopt;

namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

// min z1 + z2 over the unit square's corners subject to z1 >= 0.5.
// Optimal value 0.5 at (0.5, 0); the active multiplier is 1.
ProblemInstance little_instance() {
  ConvexFunctionSpec f = make_linear(vec2(1.0, 1.0));
  ConstraintVector g;
  g.components.push_back(make_linear(vec2(-1.0, 0.0), 0.5));
  return ProblemInstance(f, g, box_corners(2, 0.0, 1.0), vec2(0.75, 0.25));
}

SolverParams little_params() {
  SolverParams params;
  params.epsilon = 0.05;
  params.beta = 0.1;
  params.alpha = 0.003;
  params.lambda_cap = 8.0;
  params.sigma0 = 0.0;
  params.max_iterations = 20000;
  params.lambda_init = Vector::Zero(1);
  params.xbar = std::sqrt(2.0);
  params.f_star = 0.5;
  return params;
}

// The exp_example geometry, size n, edge s = 1/sqrt(n * 0.6).
ProblemInstance exp_instance(int n = 3) {
  const double s = 1.0 / std::sqrt(0.6 * n);
  ConvexFunctionSpec f;
  f.curvature = 0.6;
  f.name = "sum_of_exponentials";
  f.value = [n](const Vector& z) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += std::exp((i + 1) * z[i]);
    return total;
  };
  f.subgradient = [n](const Vector& z) {
    Vector g(n);
    for (int i = 0; i < n; ++i) g[i] = (i + 1) * std::exp((i + 1) * z[i]);
    return g;
  };
  ConstraintVector g;
  for (int j = 1; j <= n; ++j) {
    Vector c = Vector::Zero(n);
    c[j - 1] = -1.0;
    g.components.push_back(make_linear(c, s * j / (n * (n + 1.0))));
  }
  return ProblemInstance(std::move(f), std::move(g), box_corners(n, 0.0, s),
                         Vector::Constant(n, s));
}

}  // namespace

TEST_CASE("multiplier_step: ascent with projection onto [0, cap]") {
  MultiplierState state;
  state.lambda = Vector::Constant(1, 0.5);
  state.cap = 1.0;
  state.alpha = 0.1;

  CHECK(multiplier_step(state, Vector::Constant(1, -10.0)).lambda[0] == 0.0);
  CHECK(multiplier_step(state, Vector::Constant(1, 10.0)).lambda[0] == 1.0);

  state.lambda[0] = 0.3;
  CHECK(multiplier_step(state, Vector::Constant(1, 0.5)).lambda[0] ==
        doctest::Approx(0.35));

  state.alpha = -1.0;
  CHECK_THROWS_AS(multiplier_step(state, Vector::Constant(1, 0.0)),
                  ValidationError);
}

TEST_CASE("lagrangian_value: objective plus priced constraints") {
  ProblemInstance problem = little_instance();
  // f(1, 0) = 1, g(1, 0) = -0.5, lambda = 2 -> 1 - 1 = 0.
  CHECK(lagrangian_value(problem, vec2(1.0, 0.0), Vector::Constant(1, 2.0)) ==
        doctest::Approx(0.0));
  CHECK_THROWS_AS(
      lagrangian_value(problem, vec2(1.0, 0.0), Vector::Constant(1, -0.1)),
      ValidationError);
}

TEST_CASE("slater_margin: distance of the interior point from the boundary") {
  CHECK(slater_margin(little_instance()) == doctest::Approx(0.25));

  // The exp_example interior point s*(1,..,1): margin s(1 - n/(n(n+1))).
  const double s = 1.0 / std::sqrt(1.8);
  CHECK(slater_margin(exp_instance()) == doctest::Approx(0.75 * s));
  CHECK(slater_margin(exp_instance()) == doctest::Approx(0.559016994).epsilon(1e-8));

  // A boundary "interior" point cannot certify anything.
  ConvexFunctionSpec f = make_linear(vec2(1.0, 1.0));
  ConstraintVector g;
  g.components.push_back(make_linear(vec2(-1.0, 0.0), 0.5));
  ActionSet square = box_corners(2, 0.0, 1.0);
  CHECK_THROWS_AS(
      slater_margin(ProblemInstance(f, g, square, vec2(0.5 + 1e-12, 0.5))),
      ValidationError);
}

TEST_CASE("dual_bound_from_slater: certified multiplier-norm bound") {
  // (f(interior) - q(0) + delta) / margin on the exp_example geometry:
  // f = 15.90549, q(0) = 3 (minimum of the objective over the box), margin
  // 0.559017, delta = 0.1.
  const double bound = dual_bound_from_slater(exp_instance(),
                                              Vector::Zero(3), 0.1);
  CHECK(bound == doctest::Approx(23.2649).epsilon(1e-3));
}

TEST_CASE("lambda_bar_requirement: minimal admissible cap") {
  // 3/margin * (f(interior) - q_ref + delta) + alpha m gbar with the declared
  // magnitude 0.6211 and q_ref at the optimum 4.095074.
  ProblemInstance problem = exp_instance();
  const double req = lambda_bar_requirement(problem, 7.29e-5, 0.05, 0.0,
                                            4.095074, 0.6211);
  CHECK(req == doctest::Approx(63.918).epsilon(1e-3));
}

TEST_CASE("alpha_bound: dual step admissibility") {
  CHECK(alpha_bound(0.05, 0.5, 0.4, 0.025, 3, 0.6211, 0.0) ==
        doctest::Approx(7.20068e-5).epsilon(1e-4));
  CHECK(alpha_bound(0.05, 0.5, 0.4, 0.025, 3, 0.6211, 1.0) ==
        doctest::Approx(1.70629e-5).epsilon(1e-4));
  CHECK_THROWS_AS(alpha_bound(0.05, 0.5, 0.6, 0.025, 3, 0.6211, 0.0),
                  ValidationError);
}

TEST_CASE("theorem brackets: frozen arithmetic") {
  // k = 1, alpha = 1, sigma0 = 0, cap = 1, gbar = 1, m = 1, epsilon = 0.
  const auto [main_lo, main_hi] = bound_main(1, 1.0, 0.0, 0.0, 1.0, 1.0, 1);
  CHECK(main_lo == doctest::Approx(-2.5));
  CHECK(main_hi == doctest::Approx(2.5));

  const auto [slack_lo, slack_hi] = bound_slackness(1, 1.0, 1.0, 1.0, 1);
  CHECK(slack_lo == doctest::Approx(-1.0));
  CHECK(slack_hi == doctest::Approx(1.0));

  CHECK(feasibility_cap(1, 1.0, 1.0) == doctest::Approx(1.0));
  CHECK(feasibility_cap(2, 1.0, 1.0) == doctest::Approx(0.5));

  const auto [lag_lo, lag_hi] =
      bound_lagrangian_average(1, 1.0, 0.05, 1.0, 1.0, 1);
  CHECK(lag_lo == doctest::Approx(-1.6));
  CHECK(lag_hi == doctest::Approx(1.6));

  // All brackets scale as 1/k through the cap term.
  const auto [far_lo, far_hi] = bound_main(1000, 1.0, 0.0, 0.0, 1.0, 1.0, 1);
  CHECK(far_lo == doctest::Approx(-2.0 / 1000.0 - 0.5));
  CHECK(far_hi == doctest::Approx(1.0 + 1.5 / 1000.0));

  const BoundReport report = bound_report(1, 1.0, 0.05, 0.0, 1.0, 1.0, 1);
  CHECK(report.main_lower == doctest::Approx(-2.6));
  CHECK(report.main_upper == doctest::Approx(2.6));
  CHECK(report.slackness_upper == doctest::Approx(1.0));
  REQUIRE(report.feasibility_caps.size() == 1);
  CHECK(report.feasibility_caps[0] == doctest::Approx(1.0));
  CHECK(report.lag_avg_upper == doctest::Approx(1.6));

  CHECK_THROWS_AS(bound_main(0, 1.0, 0.0, 0.0, 1.0, 1.0, 1), ValidationError);
}

TEST_CASE("unified_primal_step: the three modes agree where they must") {
  ProblemInstance problem = little_instance();
  const Vector lambda = Vector::Constant(1, 0.4);
  const Vector z = vec2(0.6, 0.3);
  const double beta = 0.2;

  const PrimalStepResult discrete =
      unified_primal_step(problem, z, lambda, beta, PrimalMode::discrete);
  REQUIRE(discrete.action_index.has_value());

  // Exact enumeration of the blended Lagrangian.
  const auto [expected, expected_value] = brute_argmin(
      [&](const Vector& x) {
        return lagrangian_value(problem, (1.0 - beta) * z + beta * x, lambda);
      },
      problem.actions());
  CHECK(*discrete.action_index == expected);
  CHECK(discrete.objective == doctest::Approx(expected_value));

  // Relaxing to the hull can only improve the blended value.
  const PrimalStepResult hull =
      unified_primal_step(problem, z, lambda, beta, PrimalMode::convex_hull);
  CHECK(hull.objective <= discrete.objective + 1e-8);
  CHECK_FALSE(hull.action_index.has_value());

  // The hybrid rule returns the better of the two, preferring the vertex.
  const PrimalStepResult hybrid =
      unified_primal_step(problem, z, lambda, beta, PrimalMode::hybrid);
  CHECK(hybrid.objective <= discrete.objective + 1e-12);
  // Affine blending keeps the hull optimum on a vertex, so the tie goes to
  // the discrete action.
  CHECK(hybrid.action_index.has_value());
}

TEST_CASE("run_constrained: clean run satisfies every theorem bracket") {
  ProblemInstance problem = little_instance();
  SolverParams params = little_params();
  MultiplierSource source = MultiplierSource::exact();
  DescentState initial =
      make_vertex_state(problem.actions(), 3, params.beta);  // (1, 1)

  const ConstrainedRunResult result =
      run_constrained(problem, params, source, {}, &initial);

  CHECK(result.kbar_first_hit >= 1);
  CHECK(result.kbar_confirmed == result.kbar_first_hit);
  CHECK(result.kbar_first_hit < 5000);
  CHECK(result.gap_breaches_after_confirmation == 0);
  CHECK(result.final_dual_gap <= 2.0 * params.epsilon + 1e-9);

  CHECK(result.main_violations == 0);
  CHECK(result.slackness_violations == 0);
  CHECK(result.feasibility_violations == 0);
  CHECK(result.lag_avg_violations == 0);
  CHECK(result.weak_duality_violations == 0);
  CHECK(result.contract_violations == 0);
  CHECK_FALSE(result.contract_violated());

  // The averaged iterate approaches the optimum within the theorem's radius.
  REQUIRE(result.averages.active());
  const Vector z_diamond = result.averages.z_diamond();
  const double f_diamond = problem.objective().value(z_diamond);
  const auto [lo, hi] =
      bound_main(result.averages.count, params.alpha, params.epsilon,
                 params.sigma0, params.lambda_cap, result.gbar_used, 1);
  CHECK(f_diamond - 0.5 >= lo - 1e-9);
  CHECK(f_diamond - 0.5 <= hi + 1e-9);

  // Multipliers settle near the active-constraint price.
  CHECK(result.final_multipliers.lambda[0] == doctest::Approx(1.0).epsilon(0.1));

  CHECK(result.alpha_within_limit);
  CHECK(result.beta_within_limit);
  CHECK(result.gbar_computed == doctest::Approx(0.5));
}

TEST_CASE("run_constrained: identical seeds give identical runs") {
  ProblemInstance problem = little_instance();
  SolverParams params = little_params();
  params.max_iterations = 3000;
  MultiplierSource source = MultiplierSource::exact();

  DescentState a = make_vertex_state(problem.actions(), 3, params.beta);
  DescentState b = make_vertex_state(problem.actions(), 3, params.beta);
  const ConstrainedRunResult r1 = run_constrained(problem, params, source, {}, &a);
  const ConstrainedRunResult r2 = run_constrained(problem, params, source, {}, &b);

  REQUIRE(r1.trace.size() == r2.trace.size());
  for (std::size_t i = 0; i < r1.trace.size(); ++i) {
    CHECK(r1.trace[i].k == r2.trace[i].k);
    CHECK((r1.trace[i].z.array() == r2.trace[i].z.array()).all());
    CHECK((r1.trace[i].lambda.array() == r2.trace[i].lambda.array()).all());
    CHECK(r1.trace[i].dual_gap == r2.trace[i].dual_gap);
  }
  CHECK((r1.final_z.array() == r2.final_z.array()).all());
}

TEST_CASE("run_constrained: deviations beyond the declared band are flagged") {
  ProblemInstance problem = little_instance();
  SolverParams params = little_params();
  params.max_iterations = 500;
  params.sigma0 = 0.5;  // declared band alpha/2; the feed deviates by alpha

  MultiplierSource source;
  source.kind = MultiplierSource::Kind::perturbed;
  const double alpha = params.alpha;
  source.perturb = [alpha](const Vector& lambda, long long, Rng&) {
    return Vector(lambda.array() + alpha);
  };

  DescentState initial = make_vertex_state(problem.actions(), 0, params.beta);
  const ConstrainedRunResult result =
      run_constrained(problem, params, source, {}, &initial);

  CHECK(result.contract_violations == params.max_iterations);
  CHECK(result.first_contract_violation_k == 1);
  CHECK(result.max_contract_gap == doctest::Approx(alpha));
  CHECK(result.contract_violated());
}

TEST_CASE("run_constrained: rejects inadmissible inputs") {
  ProblemInstance problem = little_instance();
  MultiplierSource source = MultiplierSource::exact();

  SolverParams params = little_params();
  params.alpha = 0.0;
  CHECK_THROWS_AS(run_constrained(problem, params, source, {}, nullptr),
                  ValidationError);

  params = little_params();
  params.lambda_init = Vector::Constant(1, -1.0);
  CHECK_THROWS_AS(run_constrained(problem, params, source, {}, nullptr),
                  ValidationError);

  // Strict mode turns the out-of-bound dual step into an error.
  params = little_params();
  params.alpha = 0.1;  // far above the admissible bound (= 4e-3 scale)
  params.strict = true;
  CHECK_THROWS_AS(run_constrained(problem, params, source, {}, nullptr),
                  ValidationError);
}

TEST_CASE("property: weak duality against the known optimum") {
  ProblemInstance problem = little_instance();
  Rng rng(31);
  for (int i = 0; i < 50; ++i) {
    const Vector lambda = Vector::Constant(1, rng.uniform(0.0, 3.0));
    const ReferenceSolution dual = reference_dual(problem, lambda, {});
    CHECK(dual.value <= 0.5 + 1e-7);
  }
}

TEST_CASE("property: strong duality self-consistency on random instances") {
  Rng rng(47);
  int built = 0;
  while (built < 50) {
    ActionSet square = box_corners(2, 0.0, 1.0);
    Vector c = vec2(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
    Vector a = vec2(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
    const Vector center = vec2(0.5, 0.5);
    // Shift the offset so the center is strictly feasible with margin 0.1.
    const double offset = -(a.dot(center) + 0.1);
    ConstraintVector g;
    g.components.push_back(make_linear(a, offset));
    ConvexFunctionSpec f = make_linear(c);
    ProblemInstance problem(f, g, square, center);
    ++built;

    const ReferenceSolution primal = reference_primal(problem, {});
    const ReferenceSolution dual =
        reference_dual(problem, primal.multipliers, {});
    CHECK(primal.value - dual.value <= 1e-6);
    CHECK(primal.value - dual.value >= -1e-8);
  }
}

TEST_CASE("property: admissible random runs satisfy every bracket") {
  Rng rng(53);
  for (int trial = 0; trial < 20; ++trial) {
    ActionSet square = box_corners(2, 0.0, 1.0);
    Vector c = vec2(rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0));
    Vector a = vec2(-1.0, 0.0);
    const double floor_level = rng.uniform(0.1, 0.6);
    ConstraintVector g;
    g.components.push_back(make_linear(a, floor_level));  // z1 >= floor_level
    ConvexFunctionSpec f = make_linear(c);
    const Vector interior = vec2(0.5 * (floor_level + 1.0), 0.5);
    ProblemInstance problem(f, g, square, interior);

    const ReferenceSolution primal = reference_primal(problem, {});

    SolverParams params;
    params.epsilon = 0.05;
    params.beta = 0.1;
    const double gbar = max_constraint_magnitude(problem);
    params.alpha = 0.9 * alpha_bound(params.epsilon, params.gamma,
                                     params.gamma1, params.beta, 1, gbar, 0.0);
    const double q_ref =
        reference_dual(problem, primal.multipliers, {}).value;
    params.lambda_cap = lambda_bar_requirement(problem, params.alpha,
                                               params.epsilon, 0.0, q_ref);
    params.max_iterations = 3000;
    params.lambda_init = Vector::Zero(1);
    params.xbar = std::sqrt(2.0);
    params.f_star = primal.value;

    MultiplierSource source = MultiplierSource::exact();
    DescentState initial = make_vertex_state(square, 3, params.beta);
    const ConstrainedRunResult result =
        run_constrained(problem, params, source, {}, &initial);

    CHECK(result.main_violations == 0);
    CHECK(result.slackness_violations == 0);
    CHECK(result.feasibility_violations == 0);
    CHECK(result.lag_avg_violations == 0);
    CHECK(result.weak_duality_violations == 0);
    CHECK(result.alpha_within_limit);
  }
}
