#include "polyproj/training.hpp"

#include <cmath>
#include <random>
#include <string>

#include "polyproj/errors.hpp"
#include "polyproj/rng.hpp"

namespace polyproj {

void LossSpec::validate() const {
  if (alpha < 0.0 || alpha > 1.0) throw UsageError("loss spec: alpha must lie in [0,1]");
  if (fixed_penalty < 0.0) throw UsageError("loss spec: fixed_penalty must be >= 0");
}

std::string loss_variant_name(LossVariant v) {
  switch (v) {
    case LossVariant::MseOnProjected: return "mse_on_projected";
    case LossVariant::BlendedAlpha: return "blended_alpha";
    case LossVariant::ResidualPenalty: return "residual_penalty";
    case LossVariant::FixedPenalty: return "fixed_penalty";
  }
  return "mse_on_projected";
}

LossVariant loss_variant_from_name(const std::string& name) {
  if (name == "mse_on_projected") return LossVariant::MseOnProjected;
  if (name == "blended_alpha") return LossVariant::BlendedAlpha;
  if (name == "residual_penalty") return LossVariant::ResidualPenalty;
  if (name == "fixed_penalty") return LossVariant::FixedPenalty;
  throw UsageError("unknown loss variant '" + name + "'");
}

double mse(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw UsageError("mse: shape mismatch");
  return (pred - target).squaredNorm() /
         (static_cast<double>(pred.rows()) * static_cast<double>(pred.cols()));
}

void TrainConfig::validate() const {
  if (epochs < 1) throw UsageError("train config: epochs must be >= 1");
  if (batch_size < 1) throw UsageError("train config: batch_size must be >= 1");
  optimizer.validate();
}

LossAndGrad loss_and_grad(const MlpModel& model, const Eigen::MatrixXd& inputs,
                          const Eigen::MatrixXd& targets, const LinearConstraintSet& cs,
                          const ProjectionConfig& proj_cfg, const LossSpec& loss_spec) {
  loss_spec.validate();
  proj_cfg.validate();
  const int B = static_cast<int>(inputs.cols());
  if (B == 0) throw UsageError("loss_and_grad: empty batch");
  if (targets.cols() != B) throw UsageError("loss_and_grad: inputs/targets batch mismatch");
  const int m = model.output_dim();
  if (targets.rows() != m || cs.dim() != m)
    throw UsageError("loss_and_grad: output/target/constraint dimension mismatch");

  ForwardCache cache;
  const Eigen::MatrixXd out = forward(model, inputs, &cache);

  const double inv_b = 1.0 / static_cast<double>(B);
  const double inv_m = 1.0 / static_cast<double>(m);
  // One combined scalar so that with an identity projection stack the
  // cotangent is arithmetically the plain batch-mean mse gradient.
  const double cot_scale = 2.0 / (static_cast<double>(m) * static_cast<double>(B));
  double total_loss = 0.0;
  double result_stats_mse_proj = 0.0;
  double result_stats_mse_raw = 0.0;
  double result_stats_violation = 0.0;
  Eigen::MatrixXd cot = Eigen::MatrixXd::Zero(m, B);

  for (int i = 0; i < B; ++i) {
    const Eigen::VectorXd raw = out.col(i);
    const Eigen::VectorXd y = targets.col(i);
    const ProjectionTrace trace = project(cs, raw, proj_cfg);
    const Eigen::VectorXd& proj = trace.result();

    double sample_loss = 0.0;
    // Cotangents already carry the batch-mean scaling.
    Eigen::VectorXd cot_proj = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd cot_raw = Eigen::VectorXd::Zero(m);

    const double mse_proj = (proj - y).squaredNorm() * inv_m;
    switch (loss_spec.variant) {
      case LossVariant::MseOnProjected:
        sample_loss = mse_proj;
        cot_proj = cot_scale * (proj - y);
        break;
      case LossVariant::BlendedAlpha: {
        const double a = loss_spec.alpha;
        sample_loss = (1.0 - a) * mse_proj + a * (raw - y).squaredNorm() * inv_m;
        cot_proj = (1.0 - a) * cot_scale * (proj - y);
        cot_raw = a * cot_scale * (raw - y);
        break;
      }
      case LossVariant::ResidualPenalty: {
        const ViolationReport rep = evaluate(cs, proj);
        sample_loss = mse_proj + rep.sum_violation;
        cot_proj = cot_scale * (proj - y);
        for (int j : rep.violated) {
          const bool eq = cs.kinds[static_cast<std::size_t>(j)] == ConstraintKind::Equality;
          const double sign = eq && rep.residuals(j) < 0.0 ? -1.0 : 1.0;
          cot_proj += inv_b * sign * cs.normals.row(j).transpose();
        }
        break;
      }
      case LossVariant::FixedPenalty: {
        const ViolationReport rep = evaluate(cs, proj);
        // Flat per-violating-sample charge; no gradient contribution.
        sample_loss = mse_proj + (rep.violated.empty() ? 0.0 : loss_spec.fixed_penalty);
        cot_proj = cot_scale * (proj - y);
        break;
      }
    }

    total_loss += sample_loss * inv_b;
    cot.col(i) = project_vjp(cs, trace, proj_cfg, cot_proj) + cot_raw;

    result_stats_mse_proj += mse_proj * inv_b;
    result_stats_mse_raw += (raw - y).squaredNorm() * inv_m * inv_b;
    result_stats_violation += trace.max_violations.front() * inv_b;
  }

  LossAndGrad result;
  result.loss = total_loss;
  result.grads = backward(model, cache, cot);
  result.mse_projected = result_stats_mse_proj;
  result.mse_raw = result_stats_mse_raw;
  result.mean_violation = result_stats_violation;
  return result;
}

TrainResult train(MlpModel model, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                  const LinearConstraintSet& cs, const ProjectionConfig& proj_cfg,
                  const LossSpec& loss_spec, const TrainConfig& train_cfg, std::uint64_t seed) {
  train_cfg.validate();
  model.validate();
  const int n = static_cast<int>(inputs.cols());
  if (n == 0) throw UsageError("train: empty dataset");

  RmsPropState opt = RmsPropState::zeros_like(model, train_cfg.optimizer);
  std::mt19937_64 order_rng(seed);

  TrainResult result;
  result.epochs.reserve(static_cast<std::size_t>(train_cfg.epochs));

  for (int epoch = 0; epoch < train_cfg.epochs; ++epoch) {
    const std::vector<int> order = shuffled_indices(n, order_rng);
    EpochStats stats;
    int n_batches = 0;

    for (int start = 0; start < n; start += train_cfg.batch_size) {
      const int b = std::min(train_cfg.batch_size, n - start);
      Eigen::MatrixXd bx(inputs.rows(), b);
      Eigen::MatrixXd by(targets.rows(), b);
      for (int i = 0; i < b; ++i) {
        bx.col(i) = inputs.col(order[static_cast<std::size_t>(start + i)]);
        by.col(i) = targets.col(order[static_cast<std::size_t>(start + i)]);
      }

      const LossAndGrad lg = loss_and_grad(model, bx, by, cs, proj_cfg, loss_spec);
      if (!std::isfinite(lg.loss))
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(n_batches));
      rmsprop_step(model, lg.grads, opt);

      stats.loss += lg.loss;
      stats.mse_projected += lg.mse_projected;
      stats.mse_raw += lg.mse_raw;
      stats.mean_violation += lg.mean_violation;
      ++n_batches;
    }

    const double inv = 1.0 / static_cast<double>(n_batches);
    stats.loss *= inv;
    stats.mse_projected *= inv;
    stats.mse_raw *= inv;
    stats.mean_violation *= inv;
    result.epochs.push_back(stats);
  }

  result.model = std::move(model);
  return result;
}

}  // namespace polyproj
