#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "polyproj/constraints.hpp"
#include "polyproj/mlp.hpp"
#include "polyproj/projection.hpp"
#include "polyproj/rmsprop.hpp"

namespace polyproj {

/// Training objectives. With y the target, out the raw network output and
/// proj its projection:
///   MseOnProjected   mse(proj, y)
///   BlendedAlpha     (1-alpha)*mse(proj, y) + alpha*mse(out, y)
///   ResidualPenalty  mse(proj, y) + mean summed positive residuals of proj
///   FixedPenalty     mse(proj, y) + fixed_penalty per violating sample
/// Positive-part terms use subgradient 0 at the kink.
enum class LossVariant { MseOnProjected, BlendedAlpha, ResidualPenalty, FixedPenalty };

struct LossSpec {
  LossVariant variant = LossVariant::MseOnProjected;
  double alpha = 0.0;          // blend weight on the raw-output error, in [0,1]
  double fixed_penalty = 1.0;  // >= 0

  void validate() const;
};

std::string loss_variant_name(LossVariant v);
LossVariant loss_variant_from_name(const std::string& name);

// Mean over samples (columns) of |pred - target|^2 / dim.
double mse(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target);

struct LossAndGrad {
  double loss = 0.0;
  ParamGrads grads;
  // Observers of the same forward pass, for epoch traces.
  double mse_projected = 0.0;
  double mse_raw = 0.0;
  double mean_violation = 0.0;  // mean over the batch of raw-output max violation
};

// Forward, per-sample projection stack, loss, and the reverse pass through
// projection and network. Columns of inputs/targets are samples.
LossAndGrad loss_and_grad(const MlpModel& model, const Eigen::MatrixXd& inputs,
                          const Eigen::MatrixXd& targets, const LinearConstraintSet& cs,
                          const ProjectionConfig& proj_cfg, const LossSpec& loss_spec);

struct TrainConfig {
  int epochs = 200;
  int batch_size = 32;
  RmsPropConfig optimizer;

  void validate() const;
};

struct EpochStats {
  double loss = 0.0;            // mean batch objective
  double mse_projected = 0.0;   // mean mse of projected outputs
  double mse_raw = 0.0;         // mean mse of raw outputs
  double mean_violation = 0.0;  // mean max violation of raw outputs
};

struct TrainResult {
  MlpModel model;
  std::vector<EpochStats> epochs;
};

// Minibatch loop: per epoch, shuffle sample order (deterministic in seed),
// then loss_and_grad + rmsprop_step per batch. Throws NumericError naming
// the epoch and batch if the objective goes non-finite.
TrainResult train(MlpModel model, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                  const LinearConstraintSet& cs, const ProjectionConfig& proj_cfg,
                  const LossSpec& loss_spec, const TrainConfig& train_cfg, std::uint64_t seed);

}  // namespace polyproj
