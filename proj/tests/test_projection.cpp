#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "polyproj/constraints.hpp"
#include "polyproj/errors.hpp"
#include "polyproj/projection.hpp"
#include "polyproj/qp_oracle.hpp"
#include "polyproj/rng.hpp"

using namespace polyproj;

namespace {

LinearConstraintSet make_set(const Eigen::MatrixXd& normals, const Eigen::VectorXd& offsets,
                             ConstraintKind kind = ConstraintKind::Inequality) {
  LinearConstraintSet cs;
  cs.normals = normals;
  cs.offsets = offsets;
  cs.kinds = std::vector<ConstraintKind>(static_cast<std::size_t>(normals.rows()), kind);
  return cs;
}

Eigen::VectorXd gaussian_vec(int n, std::mt19937_64& rng, double scale = 1.0) {
  Eigen::VectorXd v(n);
  for (int k = 0; k < n; ++k) v(k) = scale * standard_normal(rng);
  return v;
}

// A feasible point near the anchor, by rejection.
Eigen::VectorXd random_feasible_point(const LinearConstraintSet& cs, std::mt19937_64& rng) {
  const Eigen::VectorXd& anchor = *cs.anchor;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const Eigen::VectorXd cand = anchor + gaussian_vec(cs.dim(), rng, 0.05);
    if (evaluate(cs, cand).max_violation == 0.0) return cand;
  }
  return anchor;
}

ProjectionConfig cfg_with(double relaxation, int layers, WeightMode mode = WeightMode::OneOverM,
                          StepRule rule = StepRule::Surrogate, double epsilon = 1e-8) {
  ProjectionConfig cfg;
  cfg.relaxation = relaxation;
  cfg.layers = layers;
  cfg.epsilon = epsilon;
  cfg.weight_mode = mode;
  cfg.step_rule = rule;
  return cfg;
}

}  // namespace

TEST_CASE("project_equality: hand-evaluated single hyperplane") {
  const auto cs = make_set(Eigen::RowVector2d(1.0, 1.0), Eigen::VectorXd::Constant(1, 1.0),
                           ConstraintKind::Equality);
  const Eigen::VectorXd y = Eigen::Vector2d(1.0, 1.0);
  const Eigen::VectorXd p = project_equality(cs, y);
  CHECK(p(0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(p(1) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("project_equality: points on the affine set are fixed") {
  std::mt19937_64 rng(12);
  Eigen::MatrixXd normals(2, 5);
  Eigen::VectorXd offsets(2);
  for (int j = 0; j < 2; ++j) {
    for (int k = 0; k < 5; ++k) normals(j, k) = standard_normal(rng);
    offsets(j) = standard_normal(rng);
  }
  const auto cs = make_set(normals, offsets, ConstraintKind::Equality);
  const Eigen::VectorXd p = project_equality(cs, gaussian_vec(5, rng));
  const Eigen::VectorXd p2 = project_equality(cs, p);
  CHECK((p2 - p).norm() < 1e-10);  // idempotence
  CHECK((cs.normals * p - cs.offsets).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("project_equality: matches the oracle on random full-rank systems") {
  std::mt19937_64 rng(81);
  for (int trial = 0; trial < 30; ++trial) {
    Eigen::MatrixXd normals(3, 8);
    Eigen::VectorXd offsets(3);
    for (int j = 0; j < 3; ++j) {
      for (int k = 0; k < 8; ++k) normals(j, k) = standard_normal(rng);
      offsets(j) = standard_normal(rng);
    }
    const auto cs = make_set(normals, offsets, ConstraintKind::Equality);
    const Eigen::VectorXd y = gaussian_vec(8, rng);
    CHECK((project_equality(cs, y) - closest_point(cs, y).point).norm() < 1e-8);
  }
}

TEST_CASE("project_equality: orthogonality and non-expansiveness") {
  std::mt19937_64 rng(82);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd normals(3, 6);
    Eigen::VectorXd offsets(3);
    for (int j = 0; j < 3; ++j) {
      for (int k = 0; k < 6; ++k) normals(j, k) = standard_normal(rng);
      offsets(j) = standard_normal(rng);
    }
    const auto cs = make_set(normals, offsets, ConstraintKind::Equality);
    const Eigen::VectorXd y = gaussian_vec(6, rng, 2.0);
    const Eigen::VectorXd p = project_equality(cs, y);
    for (int zt = 0; zt < 5; ++zt) {
      // feasible z: project an arbitrary point onto the affine set
      const Eigen::VectorXd z = project_equality(cs, gaussian_vec(6, rng, 2.0));
      CHECK(std::abs((y - p).dot(p - z)) < 1e-9);
      CHECK((p - z).norm() <= (y - z).norm() + 1e-12);
    }
  }
}

TEST_CASE("project_equality: rank-deficient normals raise, naming the tolerance") {
  Eigen::MatrixXd normals(2, 3);
  normals << 1, 0, 0, 1, 0, 0;  // duplicated row
  const auto cs = make_set(normals, Eigen::Vector2d(1.0, 1.0), ConstraintKind::Equality);
  try {
    project_equality(cs, Eigen::Vector3d(0.0, 0.0, 0.0));
    FAIL("expected RankDeficientError");
  } catch (const RankDeficientError& e) {
    CHECK(std::string(e.what()).find("1e-10") != std::string::npos);
  }
}

TEST_CASE("project_equality: more rows than dimensions raises") {
  Eigen::MatrixXd normals(3, 2);
  normals << 1, 0, 0, 1, 1, 1;
  const auto cs = make_set(normals, Eigen::Vector3d(1, 1, 1), ConstraintKind::Equality);
  CHECK_THROWS_AS(project_equality(cs, Eigen::Vector2d(0, 0)), InfeasibleError);
}

TEST_CASE("project_equality: inequality rows are a usage error") {
  const auto cs = make_set(Eigen::RowVector2d(1.0, 0.0), Eigen::VectorXd::Zero(1));
  CHECK_THROWS_AS(project_equality(cs, Eigen::Vector2d(1, 1)), UsageError);
}

TEST_CASE("project_step: single halfspace orthogonal projection") {
  const auto cs = make_set(Eigen::RowVector2d(1.0, 0.0), Eigen::VectorXd::Zero(1));
  const Eigen::Vector2d y(2.0, 3.0);

  const Eigen::VectorXd full = project_step(
      cs, y, cfg_with(1.0, 1, WeightMode::OneOverM, StepRule::Surrogate, 1e-12));
  CHECK(full(0) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(full(1) == 3.0);

  const Eigen::VectorXd half = project_step(
      cs, y, cfg_with(0.5, 1, WeightMode::OneOverM, StepRule::Surrogate, 1e-12));
  CHECK(half(0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(half(1) == 3.0);
}

TEST_CASE("project_step: feasible points are fixed exactly") {
  const auto [cs, anchor] = build_random_feasible(8, 5, 64, 0.1);
  const Eigen::VectorXd out = project_step(cs, anchor, cfg_with(1.3, 1));
  CHECK(out == anchor);  // bitwise: the zero-weight branch returns the input
}

TEST_CASE("project_step: two violated parallel rows act like one") {
  Eigen::MatrixXd normals(2, 2);
  normals << 1, 0, 1, 0;
  const auto cs = make_set(normals, Eigen::Vector2d(0.0, 0.0));
  const Eigen::Vector2d y(2.0, 3.0);
  const Eigen::VectorXd out = project_step(cs, y, cfg_with(1.0, 1));
  CHECK(out(0) == doctest::Approx(0.0).epsilon(1e-7));
  CHECK(out(1) == 3.0);
}

TEST_CASE("project: zero layers is the identity trace") {
  const auto [cs, anchor] = build_random_feasible(4, 3, 15, 0.1);
  std::mt19937_64 rng(2);
  const Eigen::VectorXd y = gaussian_vec(4, rng);
  const ProjectionTrace trace = project(cs, y, cfg_with(1.0, 0));
  REQUIRE(trace.iterates.size() == 1);
  CHECK(trace.iterates[0] == y);
}

TEST_CASE("project: single halfspace converges in one step, then stays") {
  const auto cs = make_set(Eigen::RowVector2d(1.0, 0.0), Eigen::VectorXd::Zero(1));
  const Eigen::Vector2d y(2.0, 3.0);
  const ProjectionTrace trace = project(cs, y, cfg_with(1.0, 3));
  REQUIRE(trace.iterates.size() == 4);
  CHECK(trace.max_violations[0] == 2.0);
  // one relaxed step lands within epsilon-scale of the hyperplane and the
  // later iterates only polish that last sliver
  CHECK(trace.max_violations[1] < 1e-7);
  CHECK((trace.iterates[2] - trace.iterates[1]).norm() < 1e-7);
  CHECK((trace.iterates[3] - trace.iterates[1]).norm() < 1e-7);
  CHECK(trace.max_violations[3] <= trace.max_violations[1]);
}

TEST_CASE("project: trace violations are the evaluations of the iterates") {
  const auto [cs, anchor] = build_random_feasible(6, 4, 19, 0.1);
  std::mt19937_64 rng(3);
  const Eigen::VectorXd y = anchor + gaussian_vec(6, rng, 2.0);
  const ProjectionTrace trace = project(cs, y, cfg_with(1.2, 7));
  for (std::size_t t = 0; t < trace.iterates.size(); ++t)
    CHECK(trace.max_violations[t] == evaluate(cs, trace.iterates[t]).max_violation);
}

TEST_CASE("project: random infeasible start converges within 50 layers") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    const auto [cs, anchor] = build_random_feasible(8, 5, 4200 + trial, 0.1);
    const Eigen::VectorXd y = anchor + gaussian_vec(8, rng, 3.0);
    const ProjectionTrace trace = project(cs, y, cfg_with(1.0, 50));
    CHECK(trace.max_violations.back() < 1e-6);
  }
}

TEST_CASE("project: equality rows are approached from both sides") {
  LinearConstraintSet cs;
  cs.normals = Eigen::RowVector2d(1.0, 0.0);
  cs.offsets = Eigen::VectorXd::Constant(1, 1.0);
  cs.kinds = {ConstraintKind::Equality};
  const ProjectionTrace above = project(cs, Eigen::Vector2d(3.0, 0.0), cfg_with(1.0, 30));
  const ProjectionTrace below = project(cs, Eigen::Vector2d(-3.0, 0.0), cfg_with(1.0, 30));
  CHECK(above.max_violations.back() < 1e-6);
  CHECK(below.max_violations.back() < 1e-6);
  CHECK(above.result()(0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(below.result()(0) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("monotone error decrease toward any feasible target") {
  std::mt19937_64 rng(1313);
  for (int trial = 0; trial < 100; ++trial) {
    const auto [cs, anchor] = build_random_feasible(8, 6, 9900 + trial, 0.1);
    const Eigen::VectorXd target = random_feasible_point(cs, rng);
    const Eigen::VectorXd y0 = anchor + gaussian_vec(8, rng, 2.5);
    const double relaxation = 0.05 + 1.9 * uniform01(rng);
    const WeightMode mode = trial % 2 == 0 ? WeightMode::OneOverM : WeightMode::OneOverViolated;
    const ProjectionTrace trace = project(cs, y0, cfg_with(relaxation, 20, mode));
    for (std::size_t t = 0; t + 1 < trace.iterates.size(); ++t) {
      const double before = (trace.iterates[t] - target).squaredNorm();
      const double after = (trace.iterates[t + 1] - target).squaredNorm();
      CHECK(after <= before + 1e-12);
    }
  }
}

TEST_CASE("per-constraint step rule: exact on a single row, no denominator guard") {
  const auto cs = make_set(Eigen::RowVector2d(1.0, 0.0), Eigen::VectorXd::Zero(1));
  const Eigen::Vector2d y(2.0, 3.0);
  const Eigen::VectorXd out =
      project_step(cs, y, cfg_with(1.0, 1, WeightMode::OneOverViolated, StepRule::PerConstraint));
  CHECK(out(0) == 0.0);
  CHECK(out(1) == 3.0);
}

TEST_CASE("per-constraint step rule: error decrease and violation shrink") {
  std::mt19937_64 rng(1414);
  for (int trial = 0; trial < 25; ++trial) {
    const auto [cs, anchor] = build_random_feasible(6, 5, 880 + trial, 0.1);
    const Eigen::VectorXd target = random_feasible_point(cs, rng);
    const Eigen::VectorXd y0 = anchor + gaussian_vec(6, rng, 2.0);
    const WeightMode mode = trial % 2 ? WeightMode::OneOverM : WeightMode::OneOverViolated;
    const ProjectionTrace trace =
        project(cs, y0, cfg_with(1.0, 40, mode, StepRule::PerConstraint));
    for (std::size_t t = 0; t + 1 < trace.iterates.size(); ++t) {
      CHECK((trace.iterates[t + 1] - target).squaredNorm() <=
            (trace.iterates[t] - target).squaredNorm() + 1e-12);
    }
    if (trace.max_violations.front() > 0.0)
      CHECK(trace.max_violations.back() < 0.5 * trace.max_violations.front());
  }
}

TEST_CASE("project_vjp: identity when every step is feasible") {
  const auto [cs, anchor] = build_random_feasible(5, 4, 33, 0.2);
  const ProjectionConfig cfg = cfg_with(1.0, 4);
  const ProjectionTrace trace = project(cs, anchor, cfg);
  std::mt19937_64 rng(8);
  const Eigen::VectorXd cot = gaussian_vec(5, rng);
  CHECK(project_vjp(cs, trace, cfg, cot) == cot);
}

TEST_CASE("project_vjp: single halfspace annihilates the normal component") {
  const auto cs = make_set(Eigen::RowVector2d(1.0, 0.0), Eigen::VectorXd::Zero(1));
  const ProjectionConfig cfg = cfg_with(1.0, 1, WeightMode::OneOverM, StepRule::Surrogate, 1e-14);
  const ProjectionTrace trace = project(cs, Eigen::Vector2d(2.0, 3.0), cfg);
  const Eigen::VectorXd out = project_vjp(cs, trace, cfg, Eigen::Vector2d(0.7, -1.3));
  CHECK(std::abs(out(0)) < 1e-12);
  CHECK(out(1) == -1.3);
}

TEST_CASE("project_vjp: trace/config mismatch is a usage error") {
  const auto cs = make_set(Eigen::RowVector2d(1.0, 0.0), Eigen::VectorXd::Zero(1));
  const ProjectionTrace trace = project(cs, Eigen::Vector2d(2.0, 3.0), cfg_with(1.0, 2));
  CHECK_THROWS_AS(project_vjp(cs, trace, cfg_with(1.0, 5), Eigen::Vector2d(1.0, 0.0)),
                  UsageError);
}

TEST_CASE("project_vjp: agrees with central finite differences off the kinks") {
  std::mt19937_64 rng(271828);
  const double h = 1e-6;
  int tested = 0;
  for (int trial = 0; tested < 30 && trial < 300; ++trial) {
    const auto [cs, anchor] = build_random_feasible(6, 4, 5100 + trial, 0.1);
    const ProjectionConfig cfg =
        cfg_with(0.9, 3, trial % 2 ? WeightMode::OneOverM : WeightMode::OneOverViolated,
                 trial % 3 ? StepRule::Surrogate : StepRule::PerConstraint);
    const Eigen::VectorXd y = anchor + gaussian_vec(6, rng, 2.0);
    const Eigen::VectorXd v = gaussian_vec(6, rng);
    const Eigen::VectorXd w = gaussian_vec(6, rng);

    // Active sets must be stable under the probe step.
    const ProjectionTrace t0 = project(cs, y, cfg);
    const ProjectionTrace tp = project(cs, y + h * v, cfg);
    const ProjectionTrace tm = project(cs, y - h * v, cfg);
    if (tp.violated_sets != t0.violated_sets || tm.violated_sets != t0.violated_sets) continue;

    const double fd = w.dot(tp.result() - tm.result()) / (2.0 * h);
    const double vjp = project_vjp(cs, t0, cfg, w).dot(v);
    const double scale = std::max({1.0, std::abs(fd), std::abs(vjp)});
    CHECK(std::abs(fd - vjp) / scale < 1e-5);
    ++tested;
  }
  CHECK(tested == 30);
}

TEST_CASE("projection config validation") {
  CHECK_THROWS_AS(cfg_with(0.0, 1).validate(), UsageError);
  CHECK_THROWS_AS(cfg_with(2.0, 1).validate(), UsageError);
  CHECK_THROWS_AS(cfg_with(1.0, -1).validate(), UsageError);
  ProjectionConfig bad;
  bad.epsilon = 0.0;
  CHECK_THROWS_AS(bad.validate(), UsageError);
  CHECK_NOTHROW(cfg_with(1.999, 0).validate());
}
