#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "polyproj/constraints.hpp"
#include "polyproj/errors.hpp"
#include "polyproj/projection.hpp"
#include "polyproj/rmsprop.hpp"
#include "polyproj/rng.hpp"
#include "polyproj/synth_data.hpp"
#include "polyproj/training.hpp"

using namespace polyproj;

namespace {

Eigen::MatrixXd gaussian_mat(int r, int c, std::mt19937_64& rng, double scale = 1.0) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * standard_normal(rng);
  return m;
}

// Reference: batch-mean MSE on the raw output, no projection machinery.
LossAndGrad plain_mse_loss(const MlpModel& model, const Eigen::MatrixXd& x,
                           const Eigen::MatrixXd& y) {
  ForwardCache cache;
  const Eigen::MatrixXd out = forward(model, x, &cache);
  LossAndGrad lg;
  lg.loss = mse(out, y);
  const double scale = 2.0 / (static_cast<double>(out.rows()) * static_cast<double>(out.cols()));
  lg.grads = backward(model, cache, scale * (out - y));
  return lg;
}

bool grads_equal(const ParamGrads& a, const ParamGrads& b) {
  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    if (a.weights[l] != b.weights[l]) return false;
    if (a.bias[l] != b.bias[l]) return false;
  }
  return true;
}

ProjectionConfig proj_cfg(int layers) {
  ProjectionConfig cfg;
  cfg.layers = layers;
  return cfg;
}

// Tiny training problem on the real generator so tests stay fast.
struct TinyTask {
  LinearConstraintSet cs;
  SyntheticDataset ds;
};

TinyTask tiny_task(std::uint64_t seed, int n = 256) {
  TinyTask t;
  t.cs = build_random_feasible(8, 5, derive_seed(seed, 1), 0.1).first;
  t.ds = generate(n, t.cs, derive_seed(seed, 2));
  return t;
}

}  // namespace

TEST_CASE("zero projection layers reduce to plain mse, bitwise") {
  std::mt19937_64 rng(17);
  const MlpModel model =
      MlpModel::random({4, 6, 3}, Activation::Tanh, OutputActivation::Identity, 0, 3);
  const Eigen::MatrixXd x = gaussian_mat(4, 8, rng);
  const Eigen::MatrixXd y = gaussian_mat(3, 8, rng);
  const auto [cs, anchor] = build_random_feasible(3, 4, 5, 0.1);

  const LossAndGrad a = loss_and_grad(model, x, y, cs, proj_cfg(0), LossSpec{});
  const LossAndGrad b = plain_mse_loss(model, x, y);
  // Gradients are bitwise equal; the loss reductions differ only in
  // accumulation order.
  CHECK(a.loss == doctest::Approx(b.loss).epsilon(1e-15));
  CHECK(grads_equal(a.grads, b.grads));
}

TEST_CASE("feasible outputs make the projected gradient equal the plain one") {
  std::mt19937_64 rng(18);
  const MlpModel model =
      MlpModel::random({4, 6, 3}, Activation::Tanh, OutputActivation::Identity, 0, 4);
  const Eigen::MatrixXd x = gaussian_mat(4, 8, rng);
  const Eigen::MatrixXd y = gaussian_mat(3, 8, rng);

  // Offsets so large that every output is interior.
  LinearConstraintSet cs = build_random_feasible(3, 4, 6, 0.1).first;
  cs.offsets.array() += 1e6;

  const LossAndGrad a = loss_and_grad(model, x, y, cs, proj_cfg(3), LossSpec{});
  const LossAndGrad b = plain_mse_loss(model, x, y);
  CHECK(a.loss == doctest::Approx(b.loss).epsilon(1e-15));
  CHECK(grads_equal(a.grads, b.grads));
}

TEST_CASE("blend endpoints reduce to the pure losses") {
  std::mt19937_64 rng(19);
  const MlpModel model =
      MlpModel::random({4, 6, 3}, Activation::ReLU, OutputActivation::Identity, 0, 5);
  const Eigen::MatrixXd x = gaussian_mat(4, 8, rng);
  const Eigen::MatrixXd y = gaussian_mat(3, 8, rng);
  const auto [cs, anchor] = build_random_feasible(3, 4, 7, 0.1);

  LossSpec blend0{LossVariant::BlendedAlpha, 0.0, 1.0};
  LossSpec blend1{LossVariant::BlendedAlpha, 1.0, 1.0};

  const LossAndGrad a0 = loss_and_grad(model, x, y, cs, proj_cfg(3), blend0);
  const LossAndGrad pure_proj = loss_and_grad(model, x, y, cs, proj_cfg(3), LossSpec{});
  CHECK(a0.loss == doctest::Approx(pure_proj.loss).epsilon(1e-15));

  const LossAndGrad a1 = loss_and_grad(model, x, y, cs, proj_cfg(3), blend1);
  const LossAndGrad raw = plain_mse_loss(model, x, y);
  CHECK(a1.loss == doctest::Approx(raw.loss).epsilon(1e-15));
}

TEST_CASE("fixed penalty shifts the loss but not the gradient") {
  std::mt19937_64 rng(20);
  const MlpModel model =
      MlpModel::random({4, 6, 3}, Activation::Tanh, OutputActivation::Identity, 0, 6);
  const Eigen::MatrixXd x = gaussian_mat(4, 6, rng);
  const Eigen::MatrixXd y = gaussian_mat(3, 6, rng);
  const auto [cs, anchor] = build_random_feasible(3, 4, 8, 0.1);

  // No projection: outputs keep whatever violations they have.
  const LossSpec fixed{LossVariant::FixedPenalty, 0.0, 2.5};
  const LossAndGrad a = loss_and_grad(model, x, y, cs, proj_cfg(0), fixed);
  const LossAndGrad b = loss_and_grad(model, x, y, cs, proj_cfg(0), LossSpec{});
  CHECK(a.loss >= b.loss);
  CHECK(grads_equal(a.grads, b.grads));

  // The shift is the per-sample charge times the violating fraction.
  const Eigen::MatrixXd out = forward(model, x);
  int violating = 0;
  for (Eigen::Index i = 0; i < out.cols(); ++i)
    if (!evaluate(cs, out.col(i)).violated.empty()) ++violating;
  CHECK(a.loss - b.loss ==
        doctest::Approx(2.5 * violating / static_cast<double>(out.cols())).epsilon(1e-12));
}

TEST_CASE("full-pipeline gradients match finite differences") {
  std::mt19937_64 rng(21);
  const double h = 1e-6;
  int tested_instances = 0;
  for (int trial = 0; trial < 300 && tested_instances < 6; ++trial) {
    MlpModel model = MlpModel::random({4, 6, 3}, Activation::Tanh, OutputActivation::Identity, 0,
                                      40 + trial);
    const Eigen::MatrixXd x = gaussian_mat(4, 4, rng);
    const Eigen::MatrixXd y = gaussian_mat(3, 4, rng);
    const auto [cs, anchor] = build_random_feasible(3, 4, 60 + trial, 0.1);
    const ProjectionConfig cfg = proj_cfg(2);
    const LossSpec spec = trial % 2 ? LossSpec{LossVariant::BlendedAlpha, 0.35, 1.0}
                                    : LossSpec{LossVariant::ResidualPenalty, 0.0, 1.0};

    // Instance filter: every trace residual keeps a margin that dwarfs what
    // an h-sized parameter probe can move it, so active sets are stable.
    bool stable = true;
    const Eigen::MatrixXd out = forward(model, x);
    for (Eigen::Index i = 0; i < out.cols() && stable; ++i) {
      const ProjectionTrace tr = project(cs, out.col(i), cfg);
      for (const auto& it : tr.iterates) {
        const Eigen::VectorXd res = cs.normals * it - cs.offsets;
        if (res.cwiseAbs().minCoeff() < 1e-3) stable = false;
      }
    }
    if (!stable) continue;
    ++tested_instances;

    const LossAndGrad lg = loss_and_grad(model, x, y, cs, cfg, spec);
    // Probe a spread of parameters in every layer.
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
      for (Eigen::Index k = 0; k < model.layers[l].weights.size(); k += 9) {
        double* entry = model.layers[l].weights.data() + k;
        const double saved = *entry;
        *entry = saved + h;
        const double up = loss_and_grad(model, x, y, cs, cfg, spec).loss;
        *entry = saved - h;
        const double dn = loss_and_grad(model, x, y, cs, cfg, spec).loss;
        *entry = saved;
        const double fd = (up - dn) / (2.0 * h);
        const double an = lg.grads.weights[l].data()[k];
        const double scale = std::max({1.0, std::abs(fd), std::abs(an)});
        CHECK(std::abs(fd - an) / scale < 1e-4);
      }
    }
  }
  CHECK(tested_instances == 6);
}

TEST_CASE("training is deterministic in the seed") {
  const TinyTask t = tiny_task(900, 128);
  TrainConfig tc;
  tc.epochs = 3;
  tc.batch_size = 32;
  const MlpModel init =
      MlpModel::random({64, 16, 8}, Activation::ReLU, OutputActivation::Identity, 0, 1);

  const TrainResult a = train(init, t.ds.train_inputs(), t.ds.train_targets(), t.cs, proj_cfg(3),
                              LossSpec{}, tc, 777);
  const TrainResult b = train(init, t.ds.train_inputs(), t.ds.train_targets(), t.cs, proj_cfg(3),
                              LossSpec{}, tc, 777);
  for (std::size_t l = 0; l < a.model.layers.size(); ++l) {
    CHECK(a.model.layers[l].weights == b.model.layers[l].weights);
    CHECK(a.model.layers[l].bias == b.model.layers[l].bias);
  }
  for (std::size_t e = 0; e < a.epochs.size(); ++e) CHECK(a.epochs[e].loss == b.epochs[e].loss);
}

TEST_CASE("T=0 training is bit-identical to a hand-rolled conventional loop") {
  const TinyTask t = tiny_task(901, 160);
  TrainConfig tc;
  tc.epochs = 4;
  tc.batch_size = 32;
  const std::uint64_t seed = 4242;
  const MlpModel init =
      MlpModel::random({64, 16, 8}, Activation::ReLU, OutputActivation::Identity, 0, 2);

  const TrainResult via_train = train(init, t.ds.train_inputs(), t.ds.train_targets(), t.cs,
                                      proj_cfg(0), LossSpec{}, tc, seed);

  // Conventional loop: same batch schedule, forward, mse cotangent, step.
  MlpModel model = init;
  RmsPropState state = RmsPropState::zeros_like(model, tc.optimizer);
  const Eigen::MatrixXd X = t.ds.train_inputs();
  const Eigen::MatrixXd Y = t.ds.train_targets();
  const int n = static_cast<int>(X.cols());
  std::mt19937_64 order_rng(seed);
  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    const std::vector<int> order = shuffled_indices(n, order_rng);
    for (int start = 0; start < n; start += tc.batch_size) {
      const int b = std::min(tc.batch_size, n - start);
      Eigen::MatrixXd bx(X.rows(), b), by(Y.rows(), b);
      for (int i = 0; i < b; ++i) {
        bx.col(i) = X.col(order[static_cast<std::size_t>(start + i)]);
        by.col(i) = Y.col(order[static_cast<std::size_t>(start + i)]);
      }
      ForwardCache cache;
      const Eigen::MatrixXd out = forward(model, bx, &cache);
      const double scale = 2.0 / (static_cast<double>(out.rows()) * b);
      rmsprop_step(model, backward(model, cache, scale * (out - by)), state);
    }
  }

  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    CHECK(via_train.model.layers[l].weights == model.layers[l].weights);
    CHECK(via_train.model.layers[l].bias == model.layers[l].bias);
  }
}

TEST_CASE("exploding steps abort with epoch and batch in the message") {
  const TinyTask t = tiny_task(902, 96);
  TrainConfig tc;
  tc.epochs = 5;
  tc.batch_size = 32;
  tc.optimizer.learning_rate = 1e200;  // drives activations past the double range
  const MlpModel init =
      MlpModel::random({64, 16, 8}, Activation::ReLU, OutputActivation::Identity, 0, 3);
  try {
    train(init, t.ds.train_inputs(), t.ds.train_targets(), t.cs, proj_cfg(0), LossSpec{}, tc, 1);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("epoch") != std::string::npos);
    CHECK(msg.find("batch") != std::string::npos);
  }
}

TEST_CASE("loss decreases over the first epochs of the synthetic task") {
  // Small-N rendition of the default task; learning rate 1e-3.
  const TinyTask t = tiny_task(903, 512);
  TrainConfig tc;
  tc.epochs = 10;
  tc.batch_size = 32;
  const MlpModel init =
      MlpModel::random({64, 32, 8}, Activation::ReLU, OutputActivation::Identity, 0, 4);
  const TrainResult tr = train(init, t.ds.train_inputs(), t.ds.train_targets(), t.cs, proj_cfg(3),
                               LossSpec{}, tc, 11);
  for (const auto& e : tr.epochs) CHECK(std::isfinite(e.loss));
  for (std::size_t e = 0; e + 1 < tr.epochs.size(); ++e)
    CHECK(tr.epochs[e + 1].loss <= tr.epochs[e].loss * 1.02 + 1e-9);
  CHECK(tr.epochs.back().loss < tr.epochs.front().loss);
}

TEST_CASE("projection as post-processing never hurts against equality systems") {
  std::mt19937_64 rng(23);
  Eigen::MatrixXd normals = gaussian_mat(2, 8, rng);
  Eigen::VectorXd offsets = Eigen::Vector2d(0.3, -0.8);
  LinearConstraintSet cs;
  cs.normals = normals;
  cs.offsets = offsets;
  cs.kinds = {ConstraintKind::Equality, ConstraintKind::Equality};

  const MlpModel model =
      MlpModel::random({4, 8, 8}, Activation::Tanh, OutputActivation::Identity, 0, 12);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::VectorXd x = gaussian_mat(4, 1, rng).col(0);
    // feasible target on the affine set
    const Eigen::VectorXd y = project_equality(cs, gaussian_mat(8, 1, rng).col(0));
    const Eigen::VectorXd out = forward_one(model, x);
    const Eigen::VectorXd proj = project_equality(cs, out);
    CHECK((proj - y).norm() <= (out - y).norm() + 1e-12);
  }
}

TEST_CASE("loss spec validation") {
  LossSpec bad;
  bad.alpha = 1.5;
  CHECK_THROWS_AS(bad.validate(), UsageError);
  bad.alpha = 0.5;
  bad.fixed_penalty = -1.0;
  CHECK_THROWS_AS(bad.validate(), UsageError);
}
