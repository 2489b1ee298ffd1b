#include "polyproj/projection.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "polyproj/errors.hpp"

namespace polyproj {

namespace {

constexpr double kRankTolFactor = 1e-10;

// Violated rows of an inequality-only system (strict positivity).
std::vector<int> violated_rows(const Eigen::VectorXd& residuals) {
  std::vector<int> out;
  for (int j = 0; j < residuals.size(); ++j)
    if (residuals(j) > 0.0) out.push_back(j);
  return out;
}

Eigen::VectorXd weights_for(const std::vector<int>& violated, Eigen::Index m_rows,
                            WeightMode mode) {
  Eigen::VectorXd pi = Eigen::VectorXd::Zero(m_rows);
  if (violated.empty()) return pi;
  const double w = mode == WeightMode::OneOverM
                       ? 1.0 / static_cast<double>(m_rows)
                       : 1.0 / static_cast<double>(violated.size());
  for (int j : violated) pi(j) = w;
  return pi;
}

// One layer on an already-expanded (inequality-only) system.
Eigen::VectorXd step_expanded(const LinearConstraintSet& cs, const Eigen::VectorXd& y,
                              const ProjectionConfig& cfg, const std::vector<int>& violated,
                              const Eigen::VectorXd& residuals) {
  if (violated.empty()) return y;
  if (cfg.step_rule == StepRule::Surrogate) {
    const Eigen::VectorXd pi = weights_for(violated, cs.rows(), cfg.weight_mode);
    const Eigen::VectorXd u = cs.normals.transpose() * pi;
    const double num = pi.dot(residuals);
    return y - cfg.relaxation * num / (u.squaredNorm() + cfg.epsilon) * u;
  }
  // PerConstraint: independent single-row projections, weighted and summed.
  const double w = cfg.weight_mode == WeightMode::OneOverM
                       ? 1.0 / static_cast<double>(cs.rows())
                       : 1.0 / static_cast<double>(violated.size());
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(y.size());
  for (int j : violated) {
    const Eigen::VectorXd a = cs.normals.row(j).transpose();
    delta += w * residuals(j) / a.squaredNorm() * a;
  }
  return y - cfg.relaxation * delta;
}

}  // namespace

void ProjectionConfig::validate() const {
  if (!(relaxation > 0.0 && relaxation < 2.0))
    throw UsageError("projection config: relaxation must lie in (0,2), got " +
                     std::to_string(relaxation));
  if (!(epsilon > 0.0)) throw UsageError("projection config: epsilon must be > 0");
  if (layers < 0) throw UsageError("projection config: layers must be >= 0");
}

Eigen::VectorXd project_equality(const LinearConstraintSet& cs, const Eigen::VectorXd& y) {
  if (y.size() != cs.dim()) throw UsageError("project_equality: point dimension mismatch");
  for (auto k : cs.kinds)
    if (k != ConstraintKind::Equality)
      throw UsageError("project_equality: constraint set contains inequality rows");
  const int M = cs.rows();
  const int m = cs.dim();
  if (M == 0) return y;
  if (M > m)
    throw InfeasibleError("project_equality: " + std::to_string(M) + " equality rows exceed dimension " +
                          std::to_string(m));

  // Stacked normals as columns; project onto the affine solution set.
  const Eigen::MatrixXd N = cs.normals.transpose();  // m x M
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(N, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double tol = kRankTolFactor * sv(0);
  if (sv(sv.size() - 1) <= tol)
    throw RankDeficientError(
        "project_equality: equality normals are rank deficient (singular value " +
        std::to_string(sv(sv.size() - 1)) + " <= tolerance " + std::to_string(tol) +
        " = 1e-10 * max singular value)");

  const Eigen::VectorXd r = N.transpose() * y - cs.offsets;
  // Solve (N^T N) s = r through the SVD of N.
  const Eigen::VectorXd s =
      svd.matrixV() * (svd.matrixV().transpose() * r).cwiseQuotient(sv.cwiseProduct(sv));
  return y - N * s;
}

Eigen::VectorXd project_step(const LinearConstraintSet& cs, const Eigen::VectorXd& y,
                             const ProjectionConfig& cfg) {
  cfg.validate();
  if (y.size() != cs.dim()) throw UsageError("project_step: point dimension mismatch");
  const LinearConstraintSet exp = cs.expand_equalities();
  const Eigen::VectorXd residuals = exp.normals * y - exp.offsets;
  return step_expanded(exp, y, cfg, violated_rows(residuals), residuals);
}

ProjectionTrace project(const LinearConstraintSet& cs, const Eigen::VectorXd& y,
                        const ProjectionConfig& cfg) {
  cfg.validate();
  if (y.size() != cs.dim()) throw UsageError("project: point dimension mismatch");
  const LinearConstraintSet exp = cs.expand_equalities();

  ProjectionTrace trace;
  trace.iterates.reserve(static_cast<std::size_t>(cfg.layers) + 1);
  Eigen::VectorXd cur = y;
  for (int t = 0; t <= cfg.layers; ++t) {
    const Eigen::VectorXd residuals = exp.normals * cur - exp.offsets;
    const std::vector<int> violated = violated_rows(residuals);
    trace.iterates.push_back(cur);
    trace.max_violations.push_back(evaluate(cs, cur).max_violation);
    trace.violated_sets.push_back(violated);
    if (t == cfg.layers) break;
    if (violated.empty()) {
      // Fixed point: pad the remaining slots with the feasible iterate.
      while (static_cast<int>(trace.iterates.size()) <= cfg.layers) {
        trace.iterates.push_back(cur);
        trace.max_violations.push_back(trace.max_violations.back());
        trace.violated_sets.push_back({});
      }
      break;
    }
    cur = step_expanded(exp, cur, cfg, violated, residuals);
  }
  return trace;
}

Eigen::VectorXd project_vjp(const LinearConstraintSet& cs, const ProjectionTrace& trace,
                            const ProjectionConfig& cfg, const Eigen::VectorXd& cotangent) {
  cfg.validate();
  if (static_cast<int>(trace.iterates.size()) != cfg.layers + 1)
    throw UsageError("project_vjp: trace length does not match config layer count");
  if (cotangent.size() != cs.dim() ||
      (!trace.iterates.empty() && trace.iterates.front().size() != cs.dim()))
    throw UsageError("project_vjp: dimension mismatch");

  const LinearConstraintSet exp = cs.expand_equalities();
  Eigen::VectorXd v = cotangent;
  for (int t = cfg.layers - 1; t >= 0; --t) {
    const std::vector<int>& violated = trace.violated_sets[static_cast<std::size_t>(t)];
    if (violated.empty()) continue;  // identity step
    if (cfg.step_rule == StepRule::Surrogate) {
      const Eigen::VectorXd pi = weights_for(violated, exp.rows(), cfg.weight_mode);
      const Eigen::VectorXd u = exp.normals.transpose() * pi;
      v -= cfg.relaxation * u.dot(v) / (u.squaredNorm() + cfg.epsilon) * u;
    } else {
      const double w = cfg.weight_mode == WeightMode::OneOverM
                           ? 1.0 / static_cast<double>(exp.rows())
                           : 1.0 / static_cast<double>(violated.size());
      Eigen::VectorXd delta = Eigen::VectorXd::Zero(v.size());
      for (int j : violated) {
        const Eigen::VectorXd a = exp.normals.row(j).transpose();
        delta += w * a.dot(v) / a.squaredNorm() * a;
      }
      v -= cfg.relaxation * delta;
    }
  }
  return v;
}

}  // namespace polyproj
