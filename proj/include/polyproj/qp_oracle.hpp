#pragma once

#include <Eigen/Core>
#include <vector>

#include "polyproj/constraints.hpp"

namespace polyproj {

// Enumeration is exponential in the inequality row count; the oracle is a
// verification instrument, not a production solver.
inline constexpr int kMaxOracleRows = 20;

/// Verified optimum of the closest-point problem min |x - query|^2 over a
/// constraint set. Satisfies, within the stated tolerances: stationarity
/// (x - query) + sum_j multipliers_j * normal_j = 0, primal feasibility,
/// multipliers >= 0 on inequality rows, and complementary slackness.
struct KktSolution {
  Eigen::VectorXd point;
  Eigen::VectorXd multipliers;  // per row; zero on inactive rows
  std::vector<int> active_set;  // rows held with equality, ascending
};

inline constexpr double kKktTolerance = 1e-9;
inline constexpr double kDualTolerance = 1e-12;

// Active-set enumeration: equality rows are always active; inequality
// subsets are scanned by increasing cardinality and the best verified
// candidate (minimal distance, ties to the first found) is returned.
// Throws InfeasibleError when no subset verifies, UsageError above the
// row cap.
KktSolution closest_point(const LinearConstraintSet& cs, const Eigen::VectorXd& query);

}  // namespace polyproj
