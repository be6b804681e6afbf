// Queue-scaled multipliers: clipped accumulators, tracking bounds, arrival
// models and the paired exact/approximate recursion.

#include <cmath>

#include "doctest.h"
#include "mwopt/queue_multipliers.hpp"
#include "mwopt/rng.hpp"

using namespace mwopt;

namespace {

Vector scalar(double x) { return Vector::Constant(1, x); }

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

double iterate_accumulator(double lambda1, const std::vector<double>& deltas) {
  double lambda = lambda1;
  for (const double d : deltas) lambda = std::max(lambda + d, 0.0);
  return lambda;
}

}  // namespace

TEST_CASE("queue_step: add the drift, clip into [0, cap]") {
  QueueState state;
  state.q = scalar(3.0);
  state.cap = 5.0;
  state.alpha = 0.1;
  const Matrix A = Matrix::Ones(1, 1);

  QueueState next = queue_step(state, A, scalar(0.5), scalar(0.0));
  CHECK(next.q[0] == doctest::Approx(3.5));
  CHECK(next.lambda_tilde()[0] == doctest::Approx(0.35));

  state.q = scalar(4.9);
  CHECK(queue_step(state, A, scalar(0.5), scalar(0.0)).q[0] == 5.0);

  state.q = scalar(0.2);
  CHECK(queue_step(state, A, scalar(0.0), scalar(1.0)).q[0] == 0.0);
}

TEST_CASE("to_constraints: rows become linear components") {
  LinearConstraintSystem system;
  system.A = Matrix(2, 2);
  system.A << 1.0, -2.0, 0.0, 3.0;
  system.b = vec2(0.5, 1.0);
  const ConstraintVector g = to_constraints(system);
  REQUIRE(g.m() == 2);
  const Vector at = g.evaluate(vec2(1.0, 1.0));
  CHECK(at[0] == doctest::Approx(1.0 - 2.0 - 0.5));
  CHECK(at[1] == doctest::Approx(3.0 - 1.0));
  CHECK(g.curvatures().isZero());
}

TEST_CASE("clipped accumulator: closed form equals iteration") {
  CHECK(clipped_accumulator_closed_form(0.0, {-1.0, -1.0}) == 0.0);
  CHECK(clipped_accumulator_closed_form(0.0, {2.0, -1.0, 3.0}) == 4.0);
  CHECK(clipped_accumulator_closed_form(1.0, {-5.0, 2.0}) == 2.0);
  CHECK(clipped_accumulator_closed_form(2.5, {}) == 2.5);

  Rng rng(808);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t len = rng.uniform_index(30);
    const bool dyadic = trial % 2 == 0;
    std::vector<double> deltas(len);
    for (auto& d : deltas) {
      d = dyadic ? 0.25 * static_cast<double>(
                              static_cast<long long>(rng.uniform_index(17)) - 8)
                 : rng.uniform(-2.0, 2.0);
    }
    const double lambda1 =
        dyadic ? 0.25 * static_cast<double>(rng.uniform_index(9))
               : rng.uniform(0.0, 2.0);
    const double closed = clipped_accumulator_closed_form(lambda1, deltas);
    const double iterated = iterate_accumulator(lambda1, deltas);
    if (dyadic) {
      CHECK(closed == iterated);  // all quantities exactly representable
    } else {
      CHECK(closed == doctest::Approx(iterated).epsilon(1e-12));
    }
  }
}

TEST_CASE("tracking_gap_bound and sigma1_bound: frozen arithmetic") {
  CHECK(tracking_gap_bound(1.0, 0.1, 2.0, 0.0, 1) == doctest::Approx(40.0));
  CHECK(tracking_gap_bound(0.5, 0.2, 1.0, 3.0, 2) == doctest::Approx(16.0));

  ActionSet bits({scalar(0.0), scalar(1.0)});
  CHECK(sigma1_bound(Matrix::Ones(1, 1), bits) == doctest::Approx(2.0));

  Matrix A(2, 2);
  A << 1.0, -2.0, 0.0, 3.0;
  ActionSet square = box_corners(2, 0.0, 1.0);
  CHECK(sigma1_bound(A, square) == doctest::Approx(6.0));
}

TEST_CASE("partial_sum_deviation: alternating stream deviates by half") {
  const std::vector<Vector> alternating{scalar(0.0), scalar(1.0), scalar(0.0),
                                        scalar(1.0)};
  CHECK(partial_sum_deviation(alternating, scalar(0.5))[0] ==
        doctest::Approx(0.5));
  const std::vector<Vector> constant{scalar(0.5), scalar(0.5)};
  CHECK(partial_sum_deviation(constant, scalar(0.5))[0] == 0.0);
}

TEST_CASE("expected_action: transition rows average the realized action") {
  ActionSet bits({scalar(0.0), scalar(1.0)});
  Matrix identity = Matrix::Identity(2, 2);
  StochasticActionModel deterministic(identity);
  CHECK(expected_action(deterministic, bits, 1)[0] == 1.0);

  Matrix jitter(2, 2);
  jitter << 0.1, 0.9, 0.3, 0.7;
  StochasticActionModel noisy(jitter);
  CHECK(expected_action(noisy, bits, 0)[0] == doctest::Approx(0.9));
  CHECK(expected_action(noisy, bits, 1)[0] == doctest::Approx(0.7));

  Matrix broken(2, 2);
  broken << 0.5, 0.6, 0.5, 0.5;
  CHECK_THROWS_AS(StochasticActionModel{broken}, ValidationError);
}

TEST_CASE("sequence_gap_check: bounded input drift bounds the trace gap") {
  Rng rng(606);
  std::vector<double> deltas(200), deltas_tilde(200);
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    deltas[i] = rng.uniform(-0.5, 0.5);
    // Alternating contamination keeps the prefix-sum deviation at 0.01.
    deltas_tilde[i] = deltas[i] + ((i % 2 == 0) ? 0.01 : -0.01);
  }
  std::vector<double> lambda(201), lambda_tilde(201);
  lambda[0] = lambda_tilde[0] = 0.3;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    lambda[i + 1] = std::max(lambda[i] + deltas[i], 0.0);
    lambda_tilde[i + 1] = std::max(lambda_tilde[i] + deltas_tilde[i], 0.0);
  }
  const SequenceGapReport report =
      sequence_gap_check(lambda, lambda_tilde, deltas, deltas_tilde);
  CHECK(report.eps_hat == doctest::Approx(0.01));
  CHECK(report.max_gap <= 2.0 * report.eps_hat + 1e-12);
  CHECK(report.within_double_eps);
}

TEST_CASE("queue scaling: alpha * Q reproduces the multiplier recursion") {
  Rng rng(909);
  const Matrix A = Matrix::Ones(1, 1);
  const double alpha = 0.05;
  const double lambda_cap = 0.8;

  QueueState queue;
  queue.q = scalar(0.0);
  queue.cap = lambda_cap / alpha;
  queue.alpha = alpha;
  double lambda_tilde = 0.0;

  for (int k = 0; k < 400; ++k) {
    const Vector x = scalar(static_cast<double>(rng.uniform_index(2)));
    const Vector b_k = scalar(rng.uniform(0.0, 1.0));
    queue = queue_step(queue, A, x, b_k);
    lambda_tilde = std::min(
        std::max(lambda_tilde + alpha * (x[0] - b_k[0]), 0.0), lambda_cap);
    CHECK(queue.lambda_tilde()[0] ==
          doctest::Approx(lambda_tilde).epsilon(1e-12));
  }
}

TEST_CASE("queue actions: blended and linearized rules agree on linear costs") {
  ActionSet square = box_corners(2, 0.0, 1.0);
  Matrix A(1, 2);
  A << 1.0, 1.0;
  Rng rng(111);
  for (int trial = 0; trial < 200; ++trial) {
    ConvexFunctionSpec f =
        make_linear(vec2(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)));
    ProblemInstance problem(f, square);
    QueueState queue;
    queue.q = scalar(rng.uniform(0.0, 10.0));
    queue.cap = 100.0;
    queue.alpha = 0.1;
    const Vector z = vec2(rng.uniform01(), rng.uniform01());
    const double beta = rng.uniform(0.05, 1.0);
    CHECK(queue_action_direct(problem, z, queue, beta, A) ==
          queue_action_fw(problem, z, queue, A));
  }
}

TEST_CASE("run_tracking_pair: the gap respects its bound on every seed") {
  LinearConstraintSystem system;
  system.A = Matrix::Ones(1, 1);
  system.b = scalar(0.5);
  ActionSet bits({scalar(0.0), scalar(1.0)});
  ArrivalModel arrivals = ArrivalModel::constant(scalar(0.5));

  TrackingRunConfig config;
  config.alpha = 1.0;
  config.beta = 0.1;
  config.steps = 2000;
  config.trace_every = 50;

  auto picker = [](long long, Rng& rng) {
    return static_cast<std::size_t>(rng.uniform_index(2));
  };

  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    config.seed = seed;
    const TrackingRunResult result =
        run_tracking_pair(system, bits, arrivals, config, picker);
    CHECK(result.bound == doctest::Approx(40.0));
    CHECK(result.sigma1 == doctest::Approx(2.0));
    CHECK(result.within_bound);
    CHECK(result.max_gap <= 40.0 + 1e-9);
    CHECK_FALSE(result.sigma2_breached);
    CHECK(result.realized_deviation[0] == 0.0);
    CHECK(result.final_gap >= 0.0);
    REQUIRE(!result.trace.empty());
  }

  // Determinism: one seed, two identical runs.
  config.seed = 3;
  const TrackingRunResult r1 =
      run_tracking_pair(system, bits, arrivals, config, picker);
  const TrackingRunResult r2 =
      run_tracking_pair(system, bits, arrivals, config, picker);
  CHECK(r1.max_gap == r2.max_gap);
  CHECK(r1.final_gap == r2.final_gap);
}

TEST_CASE("run_tracking_pair: dishonest deviation claims are flagged") {
  LinearConstraintSystem system;
  system.A = Matrix::Ones(1, 1);
  system.b = scalar(0.5);
  ActionSet bits({scalar(0.0), scalar(1.0)});

  TrackingRunConfig config;
  config.alpha = 0.1;
  config.beta = 0.1;
  config.steps = 500;

  auto picker = [](long long, Rng& rng) {
    return static_cast<std::size_t>(rng.uniform_index(2));
  };

  // The alternating stream's partial sums deviate by exactly 0.5.
  ArrivalModel honest = ArrivalModel::alternating(
      {scalar(0.0), scalar(1.0)}, scalar(0.5), 0.5);
  const TrackingRunResult ok =
      run_tracking_pair(system, bits, honest, config, picker);
  CHECK_FALSE(ok.sigma2_breached);
  CHECK(ok.realized_deviation[0] == doctest::Approx(0.5));

  ArrivalModel dishonest = ArrivalModel::alternating(
      {scalar(0.0), scalar(1.0)}, scalar(0.5), 0.2);
  const TrackingRunResult flagged =
      run_tracking_pair(system, bits, dishonest, config, picker);
  CHECK(flagged.sigma2_breached);
}
