#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mwopt/problem.hpp"

namespace mwopt {

// Result of a certified reference solve.
struct ReferenceSolution {
  double value = 0.0;             // optimal value (objective or dual)
  Vector argpoint;                // point attaining it
  double tolerance_achieved = 0;  // certified optimality gap
  long long iterations_used = 0;
  Vector multipliers;             // best multipliers found (constrained solves)
};

// Exact argmin of an arbitrary callback over the finite action set.
// Ties break to the lowest index.  This is the ground truth every solver
// step is tested against.
std::pair<std::size_t, double> brute_argmin(
    const std::function<double(const Vector&)>& F, const ActionSet& actions);

// Options for the conditional-gradient reference scheme.
struct OracleOptions {
  double tolerance = 1e-8;          // required duality-gap certificate
  long long iteration_budget = 1000000;
};

// Minimizes a smooth convex function over conv(D) by away-step conditional
// gradient on the simplex of D-weights, certifying optimality with the
// standard linear-minimization duality gap.  Throws OracleFailure when the
// budget is exhausted before the gap certificate is reached.
ReferenceSolution minimize_over_hull(const ConvexFunctionSpec& F,
                                     const ActionSet& actions,
                                     const OracleOptions& options = {});

// q(lambda) = min over conv(D) of f(z) + lambda'g(z), gap-certified to
// max(tolerance, 1e-6) -- see the noise-floor note on reference_primal;
// tolerance_achieved reports the actual certificate.
ReferenceSolution reference_dual(const ProblemInstance& problem,
                                 const Vector& lambda,
                                 const OracleOptions& options = {});

// f* = min f over the hull intersected with {g <= 0}:
// a single affine constraint over a modest vertex set is solved exactly by
// enumerating the breakpoints of the piecewise-linear dual; every other
// constrained problem runs an outer multiplier-ascent loop with increasing
// quadratic penalty around the certified hull minimizer, certified by the
// gap between the best feasible upper bound and the best dual value
// q(lambda_hat) seen across rounds.  Because value-based line search cannot
// resolve improvements below the floating-point resolution of the objective,
// the iterative path certifies to max(tolerance, 1e-6); the actual
// certificate is reported in tolerance_achieved.
// Unconstrained problems reduce to minimize_over_hull.
ReferenceSolution reference_primal(const ProblemInstance& problem,
                                   const OracleOptions& options = {});

// Report from numeric curvature/subgradient validation.
struct CurvatureReport {
  bool value_inequality_ok = true;  // h(z+d)-h(z) <= s(z)'d + mu|d|^2
  bool gradient_inequality_ok = true;  // (s(z+d)-s(z))'d <= mu|d|^2
  bool finite_difference_ok = true;    // callback vs central differences
  double worst_value_violation = 0.0;
  double worst_gradient_violation = 0.0;
  double worst_fd_error = 0.0;
  Vector worst_pair_z, worst_pair_delta;
  bool ok() const {
    return value_inequality_ok && gradient_inequality_ok && finite_difference_ok;
  }
};

// Samples random pairs z, z+delta in conv(D) and checks both curvature
// inequalities (slack 1e-10) plus the subgradient against central finite
// differences (step 1e-6, relative tolerance 1e-4).  Points where the
// callback is declared non-smooth can be excluded via `smooth_at`.
CurvatureReport curvature_validate(
    const ConvexFunctionSpec& spec, const ActionSet& domain, int samples,
    std::uint64_t seed = 12345,
    const std::function<bool(const Vector&)>& smooth_at = nullptr);

// Euclidean distance from `point` to conv(actions), solved on the weight
// simplex with a gap certificate, plus the optimal weights.
struct HullDistanceResult {
  double distance = 0.0;
  std::vector<double> weights;
  bool certified = false;
};
HullDistanceResult convex_hull_distance(const ActionSet& actions,
                                        const Vector& point,
                                        double tolerance = 1e-10,
                                        long long budget = 1000000);

}  // namespace mwopt
