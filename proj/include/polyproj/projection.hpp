#pragma once

#include <Eigen/Core>
#include <vector>

#include "polyproj/constraints.hpp"

namespace polyproj {

/// Update rule for one inequality-projection layer.
///   Surrogate      one relaxed projection onto the weighted aggregate
///                  hyperplane of the violated rows
///   PerConstraint  weighted sum of single-row projections (no aggregation)
/// The two rules are distinct updates and are not claimed equivalent.
enum class StepRule { Surrogate, PerConstraint };

struct ProjectionConfig {
  double relaxation = 1.0;  // step-length factor, must lie in (0,2)
  int layers = 3;           // number of stacked projection steps T >= 0
  double epsilon = 1e-8;    // denominator guard, > 0
  WeightMode weight_mode = WeightMode::OneOverM;
  StepRule step_rule = StepRule::Surrogate;

  void validate() const;
};

/// Record of a stacked projection: iterates y^0..y^T plus, per iterate, the
/// max violation against the original set and the violated rows of the
/// equality-expanded system (the rows the next step actually acts on).
struct ProjectionTrace {
  std::vector<Eigen::VectorXd> iterates;
  std::vector<double> max_violations;
  std::vector<std::vector<int>> violated_sets;

  const Eigen::VectorXd& result() const { return iterates.back(); }
};

// Exact closest point on the affine set of a full-column-rank equality
// system. Throws RankDeficientError below singular-value tolerance
// 1e-10 * max_sv, InfeasibleError when rows exceed the dimension, and
// UsageError if the set contains inequality rows.
Eigen::VectorXd project_equality(const LinearConstraintSet& cs, const Eigen::VectorXd& y);

// One projection layer. Feasible input is a fixed point (returned
// unchanged, exactly). Equality rows are expanded to row pairs first.
Eigen::VectorXd project_step(const LinearConstraintSet& cs, const Eigen::VectorXd& y,
                             const ProjectionConfig& cfg);

// cfg.layers stacked steps with full trace. Once an iterate is exactly
// feasible the remaining entries repeat it (fixed point), so the trace
// always has layers+1 iterates.
ProjectionTrace project(const LinearConstraintSet& cs, const Eigen::VectorXd& y,
                        const ProjectionConfig& cfg);

// Pulls a cotangent on y^T back to y^0 through the stack, treating the
// per-step weights as locally constant. Each surrogate step contributes a
// symmetric rank-one Jacobian I - relaxation/(|u|^2+eps) * u u^T with u the
// aggregated normal of that step.
Eigen::VectorXd project_vjp(const LinearConstraintSet& cs, const ProjectionTrace& trace,
                            const ProjectionConfig& cfg, const Eigen::VectorXd& cotangent);

}  // namespace polyproj
