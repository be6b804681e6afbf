#pragma once

#include <vector>

#include "mwopt/types.hpp"

namespace mwopt {

// The finite action set D.  Its convex hull is the feasible region C over
// which all solvers operate; every solver step picks one element of D
// (or, in continuous modes, a point of the hull).
class ActionSet {
 public:
  // Throws ValidationError when empty, dimensions differ, or two points
  // coincide (within kComparisonTol per coordinate).
  explicit ActionSet(std::vector<Vector> points);

  Eigen::Index dimension() const { return dimension_; }
  std::size_t size() const { return points_.size(); }
  const Vector& point(std::size_t i) const { return points_[i]; }
  const std::vector<Vector>& points() const { return points_; }

 private:
  std::vector<Vector> points_;
  Eigen::Index dimension_ = 0;
};

// Upper bound on ‖z − y‖₂ over the hull: twice the largest point norm.
double diameter(const ActionSet& actions);

// The largest point norm itself.  Useful when the hull is known to contain
// the origin-centered geometry the tighter convention assumes; exposed
// because several tuned runs select step sizes from this radius instead of
// the full diameter.
double max_point_norm(const ActionSet& actions);

// Builds the 2^n corner set of an axis-aligned box [lo, hi]^n.
// Ordering: index i has bit j set => coordinate j equals hi.
ActionSet box_corners(Eigen::Index n, double lo, double hi);

}  // namespace mwopt
