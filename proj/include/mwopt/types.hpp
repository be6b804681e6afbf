#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace mwopt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Absolute tolerance for floating-point comparisons where an operation does
// not state a tighter one.
inline constexpr double kComparisonTol = 1e-12;

// Maximum reconstruction error allowed when checking that a point is a convex
// combination of the action set.
inline constexpr double kMembershipTol = 1e-9;

// Invalid problem data or parameters (maps to CLI exit code 1).
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A reference solve failed to certify its tolerance (maps to CLI exit code 2).
struct OracleFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace mwopt
