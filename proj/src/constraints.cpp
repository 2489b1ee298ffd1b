#include "polyproj/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "polyproj/errors.hpp"
#include "polyproj/rng.hpp"

namespace polyproj {

bool LinearConstraintSet::has_equalities() const {
  return std::any_of(kinds.begin(), kinds.end(),
                     [](ConstraintKind k) { return k == ConstraintKind::Equality; });
}

LinearConstraintSet LinearConstraintSet::expand_equalities() const {
  if (!has_equalities()) return *this;
  const int n_eq = static_cast<int>(
      std::count(kinds.begin(), kinds.end(), ConstraintKind::Equality));
  LinearConstraintSet out;
  out.normals.resize(rows() + n_eq, dim());
  out.offsets.resize(rows() + n_eq);
  out.kinds.assign(static_cast<std::size_t>(rows() + n_eq), ConstraintKind::Inequality);
  out.anchor = anchor;
  int r = 0;
  for (int j = 0; j < rows(); ++j) {
    out.normals.row(r) = normals.row(j);
    out.offsets(r) = offsets(j);
    ++r;
    if (kinds[static_cast<std::size_t>(j)] == ConstraintKind::Equality) {
      out.normals.row(r) = -normals.row(j);
      out.offsets(r) = -offsets(j);
      ++r;
    }
  }
  return out;
}

void LinearConstraintSet::validate() const {
  if (offsets.size() != normals.rows())
    throw UsageError("constraint set: offsets length " + std::to_string(offsets.size()) +
                     " does not match row count " + std::to_string(normals.rows()));
  if (static_cast<Eigen::Index>(kinds.size()) != normals.rows())
    throw UsageError("constraint set: kinds length does not match row count");
  if (!normals.allFinite() || !offsets.allFinite())
    throw UsageError("constraint set: non-finite entries");
  for (int j = 0; j < rows(); ++j) {
    if (normals.row(j).norm() == 0.0)
      throw UsageError("constraint set: zero normal in row " + std::to_string(j));
  }
  if (anchor && anchor->size() != normals.cols())
    throw UsageError("constraint set: anchor dimension mismatch");
}

ViolationReport evaluate(const LinearConstraintSet& cs, const Eigen::VectorXd& y) {
  if (y.size() != cs.dim())
    throw UsageError("evaluate: point dimension " + std::to_string(y.size()) +
                     " does not match constraint dimension " + std::to_string(cs.dim()));
  ViolationReport rep;
  rep.residuals = cs.normals * y - cs.offsets;
  for (int j = 0; j < cs.rows(); ++j) {
    const bool eq = cs.kinds[static_cast<std::size_t>(j)] == ConstraintKind::Equality;
    const double v = eq ? std::abs(rep.residuals(j)) : rep.residuals(j);
    if (v > 0.0) {
      rep.violated.push_back(j);
      rep.sum_violation += v;
      rep.max_violation = std::max(rep.max_violation, v);
    }
  }
  return rep;
}

Eigen::VectorXd surrogate_weights(const ViolationReport& report, WeightMode mode) {
  const auto m_rows = report.residuals.size();
  Eigen::VectorXd pi = Eigen::VectorXd::Zero(m_rows);
  if (report.violated.empty()) return pi;
  const double w = mode == WeightMode::OneOverM
                       ? 1.0 / static_cast<double>(m_rows)
                       : 1.0 / static_cast<double>(report.violated.size());
  for (int j : report.violated) pi(j) = w;
  return pi;
}

std::pair<LinearConstraintSet, Eigen::VectorXd> build_random_feasible(
    int dim, int rows, std::uint64_t seed, double margin) {
  if (dim < 1 || rows < 1) throw UsageError("build_random_feasible: dim and rows must be >= 1");
  if (margin < 0.0) throw UsageError("build_random_feasible: margin must be >= 0");
  std::mt19937_64 rng(seed);
  LinearConstraintSet cs;
  cs.normals.resize(rows, dim);
  cs.offsets.resize(rows);
  cs.kinds.assign(static_cast<std::size_t>(rows), ConstraintKind::Inequality);
  for (int j = 0; j < rows; ++j) {
    Eigen::VectorXd a(dim);
    do {
      for (int k = 0; k < dim; ++k) a(k) = standard_normal(rng);
    } while (a.norm() == 0.0);
    cs.normals.row(j) = a.transpose() / a.norm();
  }
  Eigen::VectorXd anchor(dim);
  for (int k = 0; k < dim; ++k) anchor(k) = standard_normal(rng);
  cs.offsets = cs.normals * anchor;
  cs.offsets.array() += margin;
  cs.anchor = anchor;
  return {std::move(cs), std::move(anchor)};
}

LinearConstraintSet build_segmentation_constraints(int n_pixels, int n_classes,
                                                   const std::vector<int>& present_labels) {
  if (n_pixels < 1 || n_classes < 2)
    throw UsageError("build_segmentation_constraints: need n_pixels >= 1 and n_classes >= 2");
  std::vector<bool> present(static_cast<std::size_t>(n_classes), false);
  for (int l : present_labels) {
    if (l <= 0 || l >= n_classes)
      throw UsageError("build_segmentation_constraints: label " + std::to_string(l) +
                       " out of range (must be in 1.." + std::to_string(n_classes - 1) + ")");
    present[static_cast<std::size_t>(l)] = true;
  }

  const int m = n_pixels * n_classes;
  const double np = static_cast<double>(n_pixels);
  LinearConstraintSet cs;
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> offs;

  auto class_sum_row = [&](int label, double sign) {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(m);
    for (int i = 0; i < n_pixels; ++i) a(i * n_classes + label) = sign;
    return a;
  };

  for (int l = 1; l < n_classes; ++l) {
    if (!present[static_cast<std::size_t>(l)]) {
      rows.push_back(class_sum_row(l, 1.0));  // suppress absent label mass
      offs.push_back(0.0);
    }
  }
  for (int l = 1; l < n_classes; ++l) {
    if (present[static_cast<std::size_t>(l)]) {
      rows.push_back(class_sum_row(l, -1.0));  // demand foreground mass
      offs.push_back(-0.05 * np);
    }
  }
  rows.push_back(class_sum_row(0, -1.0));  // background lower bound
  offs.push_back(-0.3 * np);
  rows.push_back(class_sum_row(0, 1.0));  // background upper bound
  offs.push_back(0.7 * np);

  const int M = static_cast<int>(rows.size());
  cs.normals.resize(M, m);
  cs.offsets.resize(M);
  for (int j = 0; j < M; ++j) {
    cs.normals.row(j) = rows[static_cast<std::size_t>(j)].transpose();
    cs.offsets(j) = offs[static_cast<std::size_t>(j)];
  }
  cs.kinds.assign(static_cast<std::size_t>(M), ConstraintKind::Inequality);
  return cs;
}

nlohmann::json to_json(const LinearConstraintSet& cs) {
  nlohmann::json j;
  j["m"] = cs.dim();
  j["M"] = cs.rows();
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < cs.rows(); ++r) {
    nlohmann::json row;
    std::vector<double> a(cs.normals.row(r).begin(), cs.normals.row(r).end());
    row["a"] = a;
    row["b"] = cs.offsets(r);
    row["kind"] =
        cs.kinds[static_cast<std::size_t>(r)] == ConstraintKind::Equality ? "eq" : "ineq";
    rows.push_back(row);
  }
  j["rows"] = rows;
  if (cs.anchor) j["anchor"] = std::vector<double>(cs.anchor->begin(), cs.anchor->end());
  return j;
}

LinearConstraintSet constraint_set_from_json(const nlohmann::json& j) {
  LinearConstraintSet cs;
  const int m = j.at("m").get<int>();
  const int M = j.at("M").get<int>();
  const auto& rows = j.at("rows");
  if (static_cast<int>(rows.size()) != M)
    throw UsageError("constraint JSON: rows array length does not match M");
  cs.normals.resize(M, m);
  cs.offsets.resize(M);
  cs.kinds.reserve(static_cast<std::size_t>(M));
  for (int r = 0; r < M; ++r) {
    const auto& row = rows[static_cast<std::size_t>(r)];
    const auto a = row.at("a").get<std::vector<double>>();
    if (static_cast<int>(a.size()) != m)
      throw UsageError("constraint JSON: row " + std::to_string(r) + " has wrong dimension");
    for (int k = 0; k < m; ++k) cs.normals(r, k) = a[static_cast<std::size_t>(k)];
    cs.offsets(r) = row.at("b").get<double>();
    const std::string kind = row.at("kind").get<std::string>();
    if (kind == "eq")
      cs.kinds.push_back(ConstraintKind::Equality);
    else if (kind == "ineq")
      cs.kinds.push_back(ConstraintKind::Inequality);
    else
      throw UsageError("constraint JSON: unknown kind '" + kind + "'");
  }
  if (j.contains("anchor")) {
    const auto a = j.at("anchor").get<std::vector<double>>();
    cs.anchor = Eigen::Map<const Eigen::VectorXd>(a.data(), static_cast<Eigen::Index>(a.size()));
  }
  cs.validate();
  return cs;
}

}  // namespace polyproj
