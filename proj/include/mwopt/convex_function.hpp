#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mwopt/types.hpp"

namespace mwopt {

// A convex function given by value and subgradient callbacks plus a declared
// curvature constant mu >= 0 satisfying
//   h(z + d) - h(z) <= subgradient(z)'d + mu * |d|^2   for z, z+d in the hull.
// The subgradient callback returns one chosen element of the subdifferential;
// at non-differentiable points the supplier decides which element.
// Callbacks must be pure: instances are immutable and shared across threads.
struct ConvexFunctionSpec {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> subgradient;
  double curvature = 0.0;
  std::string name = "h";
};

// c'z + d, curvature 0.
ConvexFunctionSpec make_linear(const Vector& c, double d = 0.0,
                               const std::string& name = "linear");

// 0.5 z'Az + b'z + c with symmetric A; declared curvature is the largest
// eigenvalue of A (a valid constant for the inequality above).
ConvexFunctionSpec make_quadratic(const Matrix& A, const Vector& b, double c = 0.0,
                                  const std::string& name = "quadratic");

// The constraint vector g = [g1, ..., gm]'.
struct ConstraintVector {
  std::vector<ConvexFunctionSpec> components;

  int m() const { return static_cast<int>(components.size()); }

  Vector evaluate(const Vector& z) const {
    Vector out(m());
    for (int j = 0; j < m(); ++j) out[j] = components[static_cast<std::size_t>(j)].value(z);
    return out;
  }

  Vector curvatures() const {
    Vector out(m());
    for (int j = 0; j < m(); ++j) out[j] = components[static_cast<std::size_t>(j)].curvature;
    return out;
  }
};

}  // namespace mwopt
