#include "polyproj/qp_oracle.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>

#include "polyproj/errors.hpp"

namespace polyproj {

namespace {

struct Candidate {
  Eigen::VectorXd point;
  Eigen::VectorXd multipliers;  // aligned with active row list
  bool ok = false;
};

// Solve min |x - q|^2 s.t. the listed rows hold with equality, via the
// stationarity system x = q - N * lambda, (N^T N) lambda = N^T q - b.
// Rank-deficient active sets get the minimum-norm multipliers.
Candidate solve_active(const LinearConstraintSet& cs, const Eigen::VectorXd& q,
                       const std::vector<int>& active) {
  Candidate cand;
  if (active.empty()) {
    cand.point = q;
    cand.multipliers.resize(0);
    cand.ok = true;
    return cand;
  }
  const int K = static_cast<int>(active.size());
  Eigen::MatrixXd N(q.size(), K);
  Eigen::VectorXd b(K);
  for (int k = 0; k < K; ++k) {
    N.col(k) = cs.normals.row(active[static_cast<std::size_t>(k)]).transpose();
    b(k) = cs.offsets(active[static_cast<std::size_t>(k)]);
  }
  const Eigen::MatrixXd G = N.transpose() * N;
  const Eigen::VectorXd r = N.transpose() * q - b;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(G);
  cand.multipliers = cod.solve(r);
  cand.point = q - N * cand.multipliers;
  cand.ok = true;
  return cand;
}

bool passes_kkt(const LinearConstraintSet& cs, const Eigen::VectorXd& q,
                const Candidate& cand, const std::vector<int>& active) {
  const Eigen::VectorXd& x = cand.point;
  // Primal feasibility over every row.
  const Eigen::VectorXd res = cs.normals * x - cs.offsets;
  for (int j = 0; j < cs.rows(); ++j) {
    const bool eq = cs.kinds[static_cast<std::size_t>(j)] == ConstraintKind::Equality;
    if (eq ? std::abs(res(j)) > kKktTolerance : res(j) > kKktTolerance) return false;
  }
  // Active rows must actually hold with equality (rejects inconsistent
  // rank-deficient subsets whose least-squares solve did not close).
  Eigen::VectorXd stat = x - q;
  for (std::size_t k = 0; k < active.size(); ++k) {
    const int j = active[k];
    if (std::abs(res(j)) > kKktTolerance) return false;
    const double lam = cand.multipliers(static_cast<Eigen::Index>(k));
    if (cs.kinds[static_cast<std::size_t>(j)] == ConstraintKind::Inequality &&
        lam < -kDualTolerance)
      return false;
    stat += lam * cs.normals.row(j).transpose();
  }
  return stat.lpNorm<Eigen::Infinity>() <= kKktTolerance;
}

}  // namespace

KktSolution closest_point(const LinearConstraintSet& cs, const Eigen::VectorXd& query) {
  if (query.size() != cs.dim()) throw UsageError("closest_point: query dimension mismatch");

  std::vector<int> eq_rows;
  std::vector<int> ineq_rows;
  for (int j = 0; j < cs.rows(); ++j) {
    if (cs.kinds[static_cast<std::size_t>(j)] == ConstraintKind::Equality)
      eq_rows.push_back(j);
    else
      ineq_rows.push_back(j);
  }
  const int n_in = static_cast<int>(ineq_rows.size());
  if (n_in > kMaxOracleRows)
    throw UsageError("closest_point: " + std::to_string(n_in) + " inequality rows exceed cap " +
                     std::to_string(kMaxOracleRows));

  double best_dist2 = std::numeric_limits<double>::infinity();
  KktSolution best;
  bool found = false;

  // Subsets by increasing cardinality, lexicographic within a cardinality.
  std::vector<int> subset;
  auto consider = [&](const std::vector<int>& chosen) {
    std::vector<int> active = eq_rows;
    active.insert(active.end(), chosen.begin(), chosen.end());
    std::sort(active.begin(), active.end());
    const Candidate cand = solve_active(cs, query, active);
    if (!cand.ok || !passes_kkt(cs, query, cand, active)) return false;
    const double d2 = (cand.point - query).squaredNorm();
    if (d2 < best_dist2) {
      best_dist2 = d2;
      best.point = cand.point;
      best.active_set = active;
      best.multipliers = Eigen::VectorXd::Zero(cs.rows());
      for (std::size_t k = 0; k < active.size(); ++k)
        best.multipliers(active[k]) = cand.multipliers(static_cast<Eigen::Index>(k));
      found = true;
    }
    return true;
  };

  // A verified empty inequality set cannot be beaten.
  if (consider({}) && eq_rows.empty()) return best;

  std::vector<int> combo;
  for (int card = 1; card <= n_in; ++card) {
    combo.assign(static_cast<std::size_t>(card), 0);
    // lexicographically first combination 0,1,..,card-1
    for (int i = 0; i < card; ++i) combo[static_cast<std::size_t>(i)] = i;
    while (true) {
      std::vector<int> chosen(static_cast<std::size_t>(card));
      for (int i = 0; i < card; ++i)
        chosen[static_cast<std::size_t>(i)] = ineq_rows[static_cast<std::size_t>(combo[static_cast<std::size_t>(i)])];
      consider(chosen);
      // advance combination
      int i = card - 1;
      while (i >= 0 && combo[static_cast<std::size_t>(i)] == n_in - card + i) --i;
      if (i < 0) break;
      ++combo[static_cast<std::size_t>(i)];
      for (int k = i + 1; k < card; ++k)
        combo[static_cast<std::size_t>(k)] = combo[static_cast<std::size_t>(k - 1)] + 1;
    }
  }

  if (!found)
    throw InfeasibleError("closest_point: no active subset yields a KKT point; system infeasible");
  return best;
}

}  // namespace polyproj
