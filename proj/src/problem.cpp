#include "mwopt/problem.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

#include "mwopt/oracle.hpp"

namespace mwopt {

ActionSet::ActionSet(std::vector<Vector> points) : points_(std::move(points)) {
  if (points_.empty()) throw ValidationError("action set must be non-empty");
  dimension_ = points_.front().size();
  if (dimension_ <= 0) throw ValidationError("action set points must have dimension >= 1");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (points_[i].size() != dimension_) {
      throw ValidationError("action set point " + std::to_string(i) +
                            " has dimension " + std::to_string(points_[i].size()) +
                            ", expected " + std::to_string(dimension_));
    }
    if (!points_[i].allFinite()) {
      throw ValidationError("action set point " + std::to_string(i) +
                            " has non-finite coordinates");
    }
  }
  for (std::size_t i = 0; i < points_.size(); ++i) {
    for (std::size_t j = i + 1; j < points_.size(); ++j) {
      if ((points_[i] - points_[j]).lpNorm<Eigen::Infinity>() <= kComparisonTol) {
        throw ValidationError("action set points " + std::to_string(i) + " and " +
                              std::to_string(j) + " coincide");
      }
    }
  }
}

double diameter(const ActionSet& actions) { return 2.0 * max_point_norm(actions); }

double max_point_norm(const ActionSet& actions) {
  double best = 0.0;
  for (const Vector& x : actions.points()) best = std::max(best, x.norm());
  return best;
}

ActionSet box_corners(Eigen::Index n, double lo, double hi) {
  if (n < 1 || n > 30) throw ValidationError("box corner dimension out of range");
  if (!(lo < hi)) throw ValidationError("box corners need lo < hi");
  std::vector<Vector> points;
  points.reserve(static_cast<std::size_t>(1) << n);
  for (std::size_t mask = 0; mask < (static_cast<std::size_t>(1) << n); ++mask) {
    Vector p(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      p[j] = (mask >> j) & 1 ? hi : lo;
    }
    points.push_back(std::move(p));
  }
  return ActionSet(std::move(points));
}

ConvexFunctionSpec make_linear(const Vector& c, double d, const std::string& name) {
  ConvexFunctionSpec spec;
  spec.value = [c, d](const Vector& z) { return c.dot(z) + d; };
  spec.subgradient = [c](const Vector&) { return c; };
  spec.curvature = 0.0;
  spec.name = name;
  return spec;
}

ConvexFunctionSpec make_quadratic(const Matrix& A, const Vector& b, double c,
                                  const std::string& name) {
  if (A.rows() != A.cols() || A.rows() != b.size()) {
    throw ValidationError("quadratic requires square A matching b");
  }
  if (!A.isApprox(A.transpose(), 1e-10)) {
    throw ValidationError("quadratic requires symmetric A");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eigs(A);
  const double lambda_max = eigs.eigenvalues().maxCoeff();
  ConvexFunctionSpec spec;
  spec.value = [A, b, c](const Vector& z) { return 0.5 * z.dot(A * z) + b.dot(z) + c; };
  spec.subgradient = [A, b](const Vector& z) -> Vector { return A * z + b; };
  spec.curvature = std::max(0.0, lambda_max);
  spec.name = name;
  return spec;
}

namespace {

void check_callbacks(const ConvexFunctionSpec& spec, const char* what) {
  if (!spec.value || !spec.subgradient) {
    throw ValidationError(std::string(what) + " '" + spec.name +
                          "' must have value and subgradient callbacks");
  }
  if (!(spec.curvature >= 0.0)) {
    throw ValidationError(std::string(what) + " '" + spec.name +
                          "' has negative curvature constant");
  }
}

void verify_membership(const ActionSet& actions, const Vector& point,
                       const std::optional<std::vector<double>>& weights,
                       std::size_t membership_limit) {
  if (point.size() != actions.dimension()) {
    throw ValidationError("interior point dimension mismatch");
  }
  if (weights.has_value()) {
    if (weights->size() != actions.size()) {
      throw ValidationError("interior point weights must have one entry per action");
    }
    double sum = 0.0;
    Vector reconstructed = Vector::Zero(actions.dimension());
    for (std::size_t i = 0; i < weights->size(); ++i) {
      const double w = (*weights)[i];
      if (w < -kComparisonTol) {
        throw ValidationError("interior point weights must be nonnegative");
      }
      sum += w;
      reconstructed += std::max(w, 0.0) * actions.point(i);
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ValidationError("interior point weights must sum to 1");
    }
    if ((reconstructed - point).norm() > kMembershipTol) {
      throw ValidationError("interior point weights do not reproduce the point");
    }
    return;
  }
  const std::size_t size = actions.size() * static_cast<std::size_t>(actions.dimension());
  if (size > membership_limit) {
    throw ValidationError(
        "interior point membership problem too large; supply combination weights");
  }
  const HullDistanceResult result = convex_hull_distance(actions, point);
  if (!result.certified) {
    throw OracleFailure("hull membership check failed to certify its tolerance");
  }
  if (result.distance > kMembershipTol) {
    std::ostringstream os;
    os << "interior point is not in the convex hull of the actions (distance "
       << result.distance << ")";
    throw ValidationError(os.str());
  }
}

}  // namespace

ProblemInstance::ProblemInstance(ConvexFunctionSpec objective, ActionSet actions)
    : objective_(std::move(objective)), actions_(std::move(actions)) {
  check_callbacks(objective_, "objective");
}

ProblemInstance::ProblemInstance(ConvexFunctionSpec objective,
                                 ConstraintVector constraints, ActionSet actions,
                                 Vector interior_point,
                                 std::optional<std::vector<double>> interior_weights,
                                 std::size_t membership_limit)
    : objective_(std::move(objective)),
      constraints_(std::move(constraints)),
      actions_(std::move(actions)),
      interior_point_(std::move(interior_point)) {
  check_callbacks(objective_, "objective");
  if (constraints_->m() < 1) {
    throw ValidationError("constraint vector must have at least one component");
  }
  for (const ConvexFunctionSpec& g : constraints_->components) {
    check_callbacks(g, "constraint");
  }
  const Vector values = constraints_->evaluate(*interior_point_);
  for (int j = 0; j < constraints_->m(); ++j) {
    if (!(values[j] < 0.0)) {
      std::ostringstream os;
      os << "interior point must be strictly feasible; constraint " << (j + 1)
         << " evaluates to " << values[j];
      throw ValidationError(os.str());
    }
  }
  verify_membership(actions_, *interior_point_, interior_weights, membership_limit);
}

const ConstraintVector& ProblemInstance::constraints() const {
  if (!constraints_) throw ValidationError("problem has no constraints");
  return *constraints_;
}

const Vector& ProblemInstance::interior_point() const {
  if (!interior_point_) throw ValidationError("problem has no interior point");
  return *interior_point_;
}

Vector ProblemInstance::constraint_values(const Vector& z) const {
  return constraints().evaluate(z);
}

double max_constraint_magnitude(const ProblemInstance& problem,
                                const std::vector<Vector>& probe_points) {
  const ConstraintVector& g = problem.constraints();
  double best = 0.0;
  for (const Vector& x : problem.actions().points()) {
    best = std::max(best, g.evaluate(x).lpNorm<Eigen::Infinity>());
  }
  for (const Vector& z : probe_points) {
    if (z.size() != problem.dimension()) {
      throw ValidationError("probe point dimension mismatch");
    }
    best = std::max(best, g.evaluate(z).lpNorm<Eigen::Infinity>());
  }
  return best;
}

double lagrangian_curvature(double mu_f, const Vector& mu_g, double lambda_cap) {
  if (!(mu_f >= 0.0)) throw ValidationError("objective curvature must be >= 0");
  if (!(lambda_cap >= 0.0)) throw ValidationError("multiplier cap must be >= 0");
  double sum = 0.0;
  for (Eigen::Index j = 0; j < mu_g.size(); ++j) {
    if (!(mu_g[j] >= 0.0)) throw ValidationError("constraint curvature must be >= 0");
    sum += mu_g[j];
  }
  // Guard inf * 0 for uncapped multipliers over linear constraints.
  if (sum == 0.0) return mu_f;
  return mu_f + lambda_cap * sum;
}

}  // namespace mwopt
