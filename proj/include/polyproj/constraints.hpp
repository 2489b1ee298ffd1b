#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <json.hpp>

namespace polyproj {

enum class ConstraintKind { Inequality, Equality };

/// A system of M linear constraint rows over points y in R^m.
/// Row j encodes normal_j . y <= offset_j (or == for equality rows).
/// Immutable by convention after construction; safe to share across threads.
struct LinearConstraintSet {
  Eigen::MatrixXd normals;            // M x m, row j is the constraint normal
  Eigen::VectorXd offsets;            // M
  std::vector<ConstraintKind> kinds;  // M

  // Interior point recorded by the random generator; satisfies every row.
  // Absent for hand-built or segmentation sets.
  std::optional<Eigen::VectorXd> anchor;

  int rows() const { return static_cast<int>(normals.rows()); }
  int dim() const { return static_cast<int>(normals.cols()); }
  bool has_equalities() const;

  // Equality rows become two opposing inequality rows (in place of the
  // original row, ordered first <=, then >=); inequality rows pass through.
  LinearConstraintSet expand_equalities() const;

  // Throws UsageError on non-finite or zero-norm rows / size mismatches.
  void validate() const;
};

/// Residuals and violation summary of one point against a constraint set.
/// Violation of an inequality row is its positive residual; of an equality
/// row, the absolute residual. A residual of exactly zero is satisfied.
struct ViolationReport {
  Eigen::VectorXd residuals;  // signed, normal_j . y - offset_j
  std::vector<int> violated;  // strictly violated row indices, ascending
  double max_violation = 0.0;
  double sum_violation = 0.0;
};

ViolationReport evaluate(const LinearConstraintSet& cs, const Eigen::VectorXd& y);

/// Weighting of violated rows when they are merged into one surrogate row.
///   OneOverM        pi_j = 1/M   on violated rows, 0 elsewhere
///   OneOverViolated pi_j = 1/|I| on violated rows, 0 elsewhere
/// Both give the zero vector when nothing is violated.
enum class WeightMode { OneOverM, OneOverViolated };

Eigen::VectorXd surrogate_weights(const ViolationReport& report, WeightMode mode);

// Random inequality system with a guaranteed interior: Gaussian normals
// (row-normalized), Gaussian anchor, offsets = normals*anchor + margin.
// Returns the set (anchor also stored inside it) and the anchor.
std::pair<LinearConstraintSet, Eigen::VectorXd> build_random_feasible(
    int dim, int rows, std::uint64_t seed, double margin);

// Image-level label constraints over a flattened per-pixel score field p of
// dimension n_pixels * n_classes, laid out pixel-major: p[pixel*n_classes + c].
// Class 0 is background. Emits, in order:
//   one suppression row per absent label      sum_i p_i(l) <= 0
//   one foreground row per present label     -sum_i p_i(l) <= -0.05*n_pixels
//   background lower bound                   -sum_i p_i(0) <= -0.3*n_pixels
//   background upper bound                    sum_i p_i(0) <=  0.7*n_pixels
LinearConstraintSet build_segmentation_constraints(int n_pixels, int n_classes,
                                                   const std::vector<int>& present_labels);

// JSON form {m, M, rows:[{a:[...], b, kind}]} plus optional "anchor";
// round-trips finite doubles bit-exactly.
nlohmann::json to_json(const LinearConstraintSet& cs);
LinearConstraintSet constraint_set_from_json(const nlohmann::json& j);

}  // namespace polyproj
