#pragma once

#include <optional>
#include <vector>

#include "mwopt/action_set.hpp"
#include "mwopt/convex_function.hpp"

namespace mwopt {

// Beyond this many coefficients (n * |D|), hull membership of the interior
// point is no longer solved at construction; explicit combination weights
// must be supplied instead.
inline constexpr std::size_t kDefaultMembershipLimit = 1 << 16;

// minimize f(z) over z in conv(D), optionally subject to g(z) <= 0.
// When constraints are present a strictly feasible interior point must be
// supplied; it certifies bounded multipliers.
class ProblemInstance {
 public:
  // Unconstrained.
  ProblemInstance(ConvexFunctionSpec objective, ActionSet actions);

  // Constrained.  Throws ValidationError when the interior point is not
  // strictly feasible or not (certifiably) in conv(D).  `interior_weights`,
  // when given, must reproduce the interior point as a convex combination of
  // the actions; otherwise membership is solved at construction (subject to
  // membership_limit).
  ProblemInstance(ConvexFunctionSpec objective, ConstraintVector constraints,
                  ActionSet actions, Vector interior_point,
                  std::optional<std::vector<double>> interior_weights = {},
                  std::size_t membership_limit = kDefaultMembershipLimit);

  const ConvexFunctionSpec& objective() const { return objective_; }
  bool constrained() const { return constraints_.has_value(); }
  const ConstraintVector& constraints() const;
  const ActionSet& actions() const { return actions_; }
  const Vector& interior_point() const;

  Eigen::Index dimension() const { return actions_.dimension(); }
  int m() const { return constrained() ? constraints_->m() : 0; }

  // g(z); throws when unconstrained.
  Vector constraint_values(const Vector& z) const;

 private:
  ConvexFunctionSpec objective_;
  std::optional<ConstraintVector> constraints_;
  ActionSet actions_;
  std::optional<Vector> interior_point_;
};

// Largest constraint magnitude over the hull: max over vertices of |g(x)|_inf,
// additionally evaluated at caller-supplied probe points (a convex component
// attains its maximum at a vertex; the magnitude of its minimum can sit in the
// interior, which the probes cover).  Documented as a vertex-enumeration bound.
double max_constraint_magnitude(const ProblemInstance& problem,
                                const std::vector<Vector>& probe_points = {});

// Curvature constant of the Lagrangian over multipliers capped at lambda_cap:
// mu_f + lambda_cap * sum_j mu_gj.
double lagrangian_curvature(double mu_f, const Vector& mu_g, double lambda_cap);

}  // namespace mwopt
