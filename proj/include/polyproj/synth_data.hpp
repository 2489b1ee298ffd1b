#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "polyproj/constraints.hpp"

namespace polyproj {

inline constexpr int kSynthInputDim = 64;

/// Regression dataset with feasible targets: unit-Gaussian inputs mapped
/// through a fixed random nonlinear function, shifted to the constraint
/// anchor, and rejection-filtered so every target satisfies every row.
/// Columns are samples.
struct SyntheticDataset {
  Eigen::MatrixXd inputs;   // kSynthInputDim x N
  Eigen::MatrixXd targets;  // m x N
  LinearConstraintSet constraints;
  std::uint64_t seed = 0;
  std::vector<int> train_idx;
  std::vector<int> test_idx;

  int size() const { return static_cast<int>(inputs.cols()); }

  Eigen::MatrixXd train_inputs() const;
  Eigen::MatrixXd train_targets() const;
  Eigen::MatrixXd test_inputs() const;
  Eigen::MatrixXd test_targets() const;
};

// The target map is a 64->32->m tanh net whose weights come from a stream
// derived from the seed but separate from the sampling stream, so the task
// does not change with the sample count. The constraint set must carry an
// anchor (targets are anchor + net(x)) and have dimension 8. Throws
// NumericError if fewer than 0.1% of a million draws land feasible.
SyntheticDataset generate(int n_samples, const LinearConstraintSet& cs, std::uint64_t seed);

}  // namespace polyproj
