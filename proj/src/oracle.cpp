#include "mwopt/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

#include "mwopt/log.hpp"
#include "mwopt/rng.hpp"

namespace mwopt {

std::pair<std::size_t, double> brute_argmin(
    const std::function<double(const Vector&)>& F, const ActionSet& actions) {
  std::size_t best_index = 0;
  double best_value = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const double value = F(actions.point(i));
    if (!std::isfinite(value)) {
      std::ostringstream os;
      os << "non-finite value at action " << i << ": " << value;
      throw ValidationError(os.str());
    }
    if (value < best_value) {  // strict: ties keep the lowest index
      best_value = value;
      best_index = i;
    }
  }
  return {best_index, best_value};
}

namespace {

// Value-based line search cannot resolve improvements below the
// floating-point resolution of the objective values, so gap certificates
// bottom out near sqrt(curvature * ulp(|f|)) -- about 1e-7 for unit-scale
// values and growing with the value scale.  Reference solves accept this
// floor when the requested tolerance is tighter and report the achieved
// certificate; problems needing tighter answers take the exact path.
constexpr double kCertificateNoiseFloor = 1e-6;

// Away-step conditional gradient over the weight simplex of the action set.
// State is the weight vector w (sparse over the vertices); the iterate is
// z = sum_i w_i x_i, so hull membership is structural.  For smooth convex
// objectives over a polytope the away-step variant converges linearly, and
// the standard duality gap  max_s grad'(z - s)  certifies optimality.
struct SimplexSolveResult {
  Vector z;
  std::vector<double> weights;
  double value = 0.0;
  double gap = std::numeric_limits<double>::infinity();
  long long iterations = 0;
  bool certified = false;
};

SimplexSolveResult away_step_minimize(
    const std::function<double(const Vector&)>& value,
    const std::function<Vector(const Vector&)>& gradient,
    const ActionSet& actions, double tolerance, long long budget,
    const std::vector<double>* warm_start = nullptr) {
  const std::size_t num_points = actions.size();
  SimplexSolveResult out;
  out.weights.assign(num_points, 0.0);

  if (warm_start != nullptr && warm_start->size() == num_points) {
    out.weights = *warm_start;
  } else {
    // Start at the best vertex: one exact linear minimization.
    const auto [start, start_value] = brute_argmin(value, actions);
    out.weights[start] = 1.0;
  }

  Vector z = Vector::Zero(actions.dimension());
  for (std::size_t i = 0; i < num_points; ++i) {
    if (out.weights[i] > 0.0) z += out.weights[i] * actions.point(i);
  }

  for (long long iter = 0; iter < budget; ++iter) {
    const Vector grad = gradient(z);
    if (!grad.allFinite()) {
      throw OracleFailure("reference solve: non-finite gradient");
    }

    // Forward vertex: minimizes grad'x over D (ties to lowest index).
    std::size_t fw_index = 0;
    double fw_score = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < num_points; ++i) {
      const double score = grad.dot(actions.point(i));
      if (score < fw_score) {
        fw_score = score;
        fw_index = i;
      }
    }
    // Away vertex: maximizes grad'x among active weights.
    std::size_t away_index = num_points;
    double away_score = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < num_points; ++i) {
      if (out.weights[i] > 0.0) {
        const double score = grad.dot(actions.point(i));
        if (score > away_score) {
          away_score = score;
          away_index = i;
        }
      }
    }

    const double gap = grad.dot(z) - fw_score;
    out.gap = gap;
    out.iterations = iter;
    if (gap <= tolerance) {
      out.certified = true;
      break;
    }

    // Choose the steeper of the forward and away directions.
    const double fw_improve = grad.dot(z) - fw_score;          // along x_fw - z
    const double away_improve = away_score - grad.dot(z);      // along z - x_away
    Vector direction;
    double max_step = 0.0;
    bool is_away = false;
    if (away_index < num_points && away_improve > fw_improve &&
        out.weights[away_index] < 1.0) {
      direction = z - actions.point(away_index);
      max_step = out.weights[away_index] / (1.0 - out.weights[away_index]);
      is_away = true;
    } else {
      direction = actions.point(fw_index) - z;
      max_step = 1.0;
    }

    // Exact step on the quadratic model is unavailable for general smooth
    // objectives; use backtracking line search on the true value.
    const double descent = grad.dot(direction);
    if (descent >= 0.0) {
      // Numerical stall: the certified gap is whatever remains.
      out.certified = gap <= tolerance;
      break;
    }
    const double current = value(z);
    double step = max_step;
    double candidate_value = std::numeric_limits<double>::infinity();
    Vector candidate;
    for (int halvings = 0; halvings < 60; ++halvings) {
      candidate = z + step * direction;
      candidate_value = value(candidate);
      if (candidate_value <= current + 0.5 * step * descent) break;
      step *= 0.5;
    }
    if (candidate_value >= current) {
      // No progress at the smallest step: stop with the current certificate.
      out.certified = gap <= tolerance;
      break;
    }

    // Update the weights to match the chosen step.
    if (is_away) {
      const double scale = 1.0 + step;
      for (std::size_t i = 0; i < num_points; ++i) out.weights[i] *= scale;
      out.weights[away_index] -= step;
      if (out.weights[away_index] < 1e-15) out.weights[away_index] = 0.0;
    } else {
      for (std::size_t i = 0; i < num_points; ++i) out.weights[i] *= (1.0 - step);
      out.weights[fw_index] += step;
    }
    z = candidate;

    // Periodically resynchronize the iterate with its weight representation
    // so the two cannot drift apart over long solves.
    if ((iter & 0xff) == 0xff) {
      z.setZero();
      for (std::size_t i = 0; i < num_points; ++i) {
        if (out.weights[i] > 0.0) z += out.weights[i] * actions.point(i);
      }
    }
  }

  out.z = z;
  out.value = value(z);
  return out;
}

// Exact constrained solve for one affine constraint over a modest vertex
// set.  With affine f and g, q(l) = min_i (c_i + l*g_i) is a lower envelope
// of lines in l, so its maximum over l >= 0 sits at l = 0 or at a crossing
// of two of the lines; enumerating the crossings finds it exactly.  The
// primal point then comes from complementary slackness: a feasible minimizing
// vertex when the multiplier is zero, a vertex on the constraint boundary, or
// the boundary point of the segment between two active vertices that straddle
// the boundary.  Returns nullopt when reconstruction fails its own checks;
// the caller falls back to the iterative path.
std::optional<ReferenceSolution> exact_affine_single_constraint(
    const ProblemInstance& problem) {
  const ActionSet& actions = problem.actions();
  const std::size_t count = actions.size();
  const ConvexFunctionSpec& f = problem.objective();
  const ConvexFunctionSpec& g = problem.constraints().components.front();

  std::vector<double> cost(count), slack(count);
  for (std::size_t i = 0; i < count; ++i) {
    const Vector point = actions.point(i);
    cost[i] = f.value(point);
    slack[i] = g.value(point);
  }

  auto dual_at = [&](double lambda) {
    double q = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < count; ++i) {
      q = std::min(q, cost[i] + lambda * slack[i]);
    }
    return q;
  };

  double best_lambda = 0.0;
  double best_q = dual_at(0.0);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = i + 1; j < count; ++j) {
      const double denom = slack[i] - slack[j];
      if (denom == 0.0) continue;
      const double lambda = (cost[j] - cost[i]) / denom;
      if (!std::isfinite(lambda) || !(lambda > 0.0)) continue;
      const double q = dual_at(lambda);
      if (q > best_q) {
        best_q = q;
        best_lambda = lambda;
      }
    }
  }

  // Vertices active in the dual minimum, split by which side of the
  // constraint boundary they sit on.
  const double face_tol = 1e-9 * std::max(1.0, std::abs(best_q));
  std::optional<std::size_t> on_boundary, inside, outside;
  for (std::size_t i = 0; i < count; ++i) {
    if (cost[i] + best_lambda * slack[i] > best_q + face_tol) continue;
    if (std::abs(slack[i]) <= face_tol) {
      if (!on_boundary) on_boundary = i;
    } else if (slack[i] < 0.0) {
      if (!inside) inside = i;
    } else {
      if (!outside) outside = i;
    }
  }

  ReferenceSolution out;
  out.multipliers = Vector::Constant(1, best_lambda);
  out.iterations_used = static_cast<long long>(count * count);
  if (best_lambda == 0.0 && (inside || on_boundary)) {
    out.argpoint = actions.point(inside ? *inside : *on_boundary);
  } else if (on_boundary) {
    out.argpoint = actions.point(*on_boundary);
  } else if (inside && outside) {
    const double g_out = slack[*outside];  // > 0
    const double g_in = slack[*inside];    // < 0
    const double weight_out = g_in / (g_in - g_out);  // zeroes the constraint
    out.argpoint = weight_out * actions.point(*outside) +
                   (1.0 - weight_out) * actions.point(*inside);
  } else {
    return std::nullopt;
  }
  out.value = f.value(out.argpoint);
  out.tolerance_achieved = std::max(0.0, out.value - best_q);

  // Self-check: the reconstructed point must be feasible and match the dual
  // bound; otherwise distrust the reconstruction.
  if (g.value(out.argpoint) > face_tol) return std::nullopt;
  if (out.tolerance_achieved > 1e-8 * std::max(1.0, std::abs(best_q))) {
    return std::nullopt;
  }
  return out;
}

}  // namespace

ReferenceSolution minimize_over_hull(const ConvexFunctionSpec& F,
                                     const ActionSet& actions,
                                     const OracleOptions& options) {
  SimplexSolveResult solve = away_step_minimize(F.value, F.subgradient, actions,
                                                options.tolerance,
                                                options.iteration_budget);
  if (!solve.certified) {
    std::ostringstream os;
    os << "hull minimization of '" << F.name << "' failed to certify gap "
       << options.tolerance << " within " << options.iteration_budget
       << " iterations (best gap " << solve.gap << ")";
    throw OracleFailure(os.str());
  }
  ReferenceSolution out;
  out.value = solve.value;
  out.argpoint = solve.z;
  out.tolerance_achieved = solve.gap;
  out.iterations_used = solve.iterations;
  return out;
}

ReferenceSolution reference_dual(const ProblemInstance& problem,
                                 const Vector& lambda,
                                 const OracleOptions& options) {
  const ConstraintVector& g = problem.constraints();
  if (lambda.size() != g.m()) {
    throw ValidationError("multiplier dimension mismatch in dual evaluation");
  }
  const ConvexFunctionSpec& f = problem.objective();
  auto value = [&f, &g, &lambda](const Vector& z) {
    double total = f.value(z);
    for (int j = 0; j < g.m(); ++j) {
      total += lambda[j] * g.components[static_cast<std::size_t>(j)].value(z);
    }
    return total;
  };
  auto gradient = [&f, &g, &lambda](const Vector& z) {
    Vector total = f.subgradient(z);
    for (int j = 0; j < g.m(); ++j) {
      total += lambda[j] * g.components[static_cast<std::size_t>(j)].subgradient(z);
    }
    return total;
  };
  SimplexSolveResult solve =
      away_step_minimize(value, gradient, problem.actions(), options.tolerance,
                         options.iteration_budget);
  if (!solve.certified &&
      !(solve.gap <= std::max(options.tolerance, kCertificateNoiseFloor))) {
    std::ostringstream os;
    os << "dual evaluation failed to certify gap " << options.tolerance
       << " (best gap " << solve.gap << ")";
    throw OracleFailure(os.str());
  }
  ReferenceSolution out;
  out.value = solve.value;
  out.argpoint = solve.z;
  out.tolerance_achieved = solve.gap;
  out.iterations_used = solve.iterations;
  out.multipliers = lambda;
  return out;
}

ReferenceSolution reference_primal(const ProblemInstance& problem,
                                   const OracleOptions& options) {
  if (!problem.constrained()) {
    return minimize_over_hull(problem.objective(), problem.actions(), options);
  }
  const ConvexFunctionSpec& f = problem.objective();
  const ConstraintVector& g = problem.constraints();
  const int m = g.m();
  const Vector& interior = problem.interior_point();

  // Declared curvature zero plus convexity means affine, so the exact
  // breakpoint enumeration applies; the size cap keeps the pairwise scan
  // cheap.
  if (m == 1 && f.curvature == 0.0 && g.curvatures().isZero() &&
      problem.actions().size() <= 512) {
    if (auto exact = exact_affine_single_constraint(problem)) {
      return *exact;
    }
  }

  // Outer multiplier ascent with increasing quadratic penalty.  The smoothed
  // term 0.5/rho * ([max(0, mu_j + rho g_j)]^2 - mu_j^2) keeps the inner
  // objective smooth and convex, so the hull solver applies directly.
  // Upper and lower bounds are each valid globally, so the best of each
  // across rounds certifies jointly even when no single round pairs them.
  Vector mu = Vector::Zero(m);
  double rho = 10.0;
  long long iterations_total = 0;
  std::vector<double> warm;
  double best_upper = std::numeric_limits<double>::infinity();
  double best_q = -std::numeric_limits<double>::infinity();
  Vector best_point;
  Vector best_multipliers;

  auto assemble = [&]() {
    ReferenceSolution out;
    out.value = best_upper;
    out.argpoint = best_point;
    out.tolerance_achieved = best_upper - best_q;
    out.iterations_used = iterations_total;
    out.multipliers = best_multipliers;
    return out;
  };

  for (int outer = 0; outer < 60; ++outer) {
    auto value = [&](const Vector& z) {
      double total = f.value(z);
      for (int j = 0; j < m; ++j) {
        const double gj = g.components[static_cast<std::size_t>(j)].value(z);
        const double shifted = mu[j] + rho * gj;
        if (shifted > 0.0) {
          total += (shifted * shifted - mu[j] * mu[j]) / (2.0 * rho);
        } else {
          total -= mu[j] * mu[j] / (2.0 * rho);
        }
      }
      return total;
    };
    auto gradient = [&](const Vector& z) {
      Vector total = f.subgradient(z);
      for (int j = 0; j < m; ++j) {
        const double gj = g.components[static_cast<std::size_t>(j)].value(z);
        const double shifted = mu[j] + rho * gj;
        if (shifted > 0.0) {
          total += shifted * g.components[static_cast<std::size_t>(j)].subgradient(z);
        }
      }
      return total;
    };

    // Inner tolerance tightens as the outer loop converges.  A stalled inner
    // solve is not fatal: the outer certificate below is what counts.
    const double inner_tol = std::max(options.tolerance * 0.1, 1e-14);
    SimplexSolveResult inner =
        away_step_minimize(value, gradient, problem.actions(), inner_tol,
                           options.iteration_budget,
                           warm.empty() ? nullptr : &warm);
    iterations_total += inner.iterations;
    warm = inner.weights;

    // Multiplier update and feasible upper bound via a shift toward the
    // strictly feasible interior point.
    const Vector g_values = g.evaluate(inner.z);
    Vector lambda_hat(m);
    for (int j = 0; j < m; ++j) {
      lambda_hat[j] = std::max(0.0, mu[j] + rho * g_values[j]);
    }

    // Lower bound on f*: minimize the Lagrangian at lambda_hat over the hull.
    // Even without a certified solve, value - gap under-estimates the true
    // minimum (convexity), so the reported bound stays valid.
    double q_value = -std::numeric_limits<double>::infinity();
    try {
      auto lag_value = [&](const Vector& z) {
        double total = f.value(z);
        for (int j = 0; j < m; ++j) {
          total += lambda_hat[j] * g.components[static_cast<std::size_t>(j)].value(z);
        }
        return total;
      };
      auto lag_gradient = [&](const Vector& z) {
        Vector total = f.subgradient(z);
        for (int j = 0; j < m; ++j) {
          total +=
              lambda_hat[j] * g.components[static_cast<std::size_t>(j)].subgradient(z);
        }
        return total;
      };
      std::vector<double> dual_warm = warm;
      const SimplexSolveResult dual_solve = away_step_minimize(
          lag_value, lag_gradient, problem.actions(), inner_tol,
          options.iteration_budget, &dual_warm);
      iterations_total += dual_solve.iterations;
      q_value = dual_solve.value - std::max(dual_solve.gap, 0.0);
    } catch (const OracleFailure&) {
      // Leave the lower bound at -inf for this round.
    }

    // Upper bound: move toward the interior point until feasible.
    double t_lo = 0.0, t_hi = 1.0;
    auto feasible_at = [&](double t) {
      const Vector zt = (1.0 - t) * inner.z + t * interior;
      return (g.evaluate(zt).array() <= 0.0).all();
    };
    double t_feas = 1.0;
    if (feasible_at(0.0)) {
      t_feas = 0.0;
    } else {
      for (int bisect = 0; bisect < 80; ++bisect) {
        const double mid = 0.5 * (t_lo + t_hi);
        if (feasible_at(mid)) {
          t_hi = mid;
        } else {
          t_lo = mid;
        }
      }
      t_feas = t_hi;
    }
    const Vector z_feas = (1.0 - t_feas) * inner.z + t_feas * interior;
    const double upper = f.value(z_feas);

    if (upper < best_upper) {
      best_upper = upper;
      best_point = z_feas;
    }
    if (q_value > best_q) {
      best_q = q_value;
      best_multipliers = lambda_hat;
    }
    if (best_upper - best_q <= options.tolerance) {
      return assemble();
    }

    mu = lambda_hat;
    // Growth keeps the multiplier estimate converging; the cap keeps the
    // penalized inner objective from becoming numerically unsolvable.
    rho = std::min(rho * 4.0, 1e10);
  }

  if (best_upper - best_q <=
      std::max(options.tolerance, kCertificateNoiseFloor)) {
    return assemble();
  }

  std::ostringstream os;
  os << "constrained reference solve failed to certify gap "
     << options.tolerance << " (best gap " << best_upper - best_q << ")";
  throw OracleFailure(os.str());
}

CurvatureReport curvature_validate(
    const ConvexFunctionSpec& spec, const ActionSet& domain, int samples,
    std::uint64_t seed, const std::function<bool(const Vector&)>& smooth_at) {
  if (samples < 1) throw ValidationError("curvature validation needs samples >= 1");
  if (!spec.value || !spec.subgradient) {
    throw ValidationError("curvature validation needs value and subgradient callbacks");
  }
  if (!(spec.curvature >= 0.0)) {
    throw ValidationError("curvature constant must be >= 0");
  }

  Rng rng(seed);
  const std::size_t num_points = domain.size();
  const Eigen::Index n = domain.dimension();
  CurvatureReport report;
  report.worst_pair_z = Vector::Zero(n);
  report.worst_pair_delta = Vector::Zero(n);
  constexpr double kSlack = 1e-10;

  auto random_hull_point = [&]() {
    // Random convex combination via exponential weights (interior-biased).
    Vector point = Vector::Zero(n);
    double total = 0.0;
    std::vector<double> w(num_points);
    for (std::size_t i = 0; i < num_points; ++i) {
      w[i] = -std::log(1.0 - rng.uniform01());
      total += w[i];
    }
    for (std::size_t i = 0; i < num_points; ++i) {
      point += (w[i] / total) * domain.point(i);
    }
    return point;
  };

  for (int s = 0; s < samples; ++s) {
    const Vector z = random_hull_point();
    const Vector y = random_hull_point();
    const Vector delta = y - z;
    const double norm2 = delta.squaredNorm();

    const double hz = spec.value(z);
    const double hy = spec.value(y);
    const Vector gz = spec.subgradient(z);
    const Vector gy = spec.subgradient(y);

    const double value_violation =
        hy - hz - gz.dot(delta) - spec.curvature * norm2;
    if (value_violation > report.worst_value_violation) {
      report.worst_value_violation = value_violation;
      report.worst_pair_z = z;
      report.worst_pair_delta = delta;
    }
    const double gradient_violation =
        (gy - gz).dot(delta) - spec.curvature * norm2;
    if (gradient_violation > report.worst_gradient_violation) {
      report.worst_gradient_violation = gradient_violation;
      report.worst_pair_z = z;
      report.worst_pair_delta = delta;
    }

    // Central finite differences against the supplied subgradient where the
    // function is declared smooth.
    if (!smooth_at || smooth_at(z)) {
      constexpr double kStep = 1e-6;
      double worst = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        Vector zp = z, zm = z;
        zp[j] += kStep;
        zm[j] -= kStep;
        const double fd = (spec.value(zp) - spec.value(zm)) / (2.0 * kStep);
        const double scale = std::max({1.0, std::abs(fd), std::abs(gz[j])});
        worst = std::max(worst, std::abs(fd - gz[j]) / scale);
      }
      report.worst_fd_error = std::max(report.worst_fd_error, worst);
    }
  }

  report.value_inequality_ok = report.worst_value_violation <= kSlack;
  report.gradient_inequality_ok = report.worst_gradient_violation <= kSlack;
  report.finite_difference_ok = report.worst_fd_error <= 1e-4;
  return report;
}

HullDistanceResult convex_hull_distance(const ActionSet& actions,
                                        const Vector& point, double tolerance,
                                        long long budget) {
  if (point.size() != actions.dimension()) {
    throw ValidationError("hull distance: point dimension mismatch");
  }
  auto value = [&point](const Vector& z) { return 0.5 * (z - point).squaredNorm(); };
  auto gradient = [&point](const Vector& z) -> Vector { return z - point; };
  SimplexSolveResult solve =
      away_step_minimize(value, gradient, actions, tolerance, budget);
  HullDistanceResult out;
  out.distance = std::sqrt(2.0 * std::max(0.0, solve.value));
  out.weights = solve.weights;
  out.certified = solve.certified;
  return out;
}

}  // namespace mwopt
