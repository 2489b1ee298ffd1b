#pragma once

#include <Eigen/Core>
#include <vector>

#include "polyproj/mlp.hpp"

namespace polyproj {

struct RmsPropConfig {
  double learning_rate = 1e-3;  // alpha, > 0
  double decay = 0.9;           // beta in (0,1); weight of the fresh squared gradient
  double weight_decay = 1e-4;   // delta, L2 coupling added to the gradient
  double epsilon = 1e-8;        // denominator guard

  void validate() const;
};

/// Second-moment accumulator, one entry per parameter. With g the gradient
/// plus weight decay, a step does
///   s     <- (1-decay)*s + decay*g^2
///   theta <- theta - learning_rate * g / (sqrt(s) + epsilon)
/// using the freshly updated s in the denominator. s stays >= 0.
struct RmsPropState {
  std::vector<Eigen::MatrixXd> s_weights;
  std::vector<Eigen::VectorXd> s_bias;
  RmsPropConfig config;

  static RmsPropState zeros_like(const MlpModel& model, const RmsPropConfig& cfg);
};

void rmsprop_step(MlpModel& model, const ParamGrads& grads, RmsPropState& state);

}  // namespace polyproj
