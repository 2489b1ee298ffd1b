#include "polyproj/rmsprop.hpp"

#include <string>

#include "polyproj/errors.hpp"

namespace polyproj {

void RmsPropConfig::validate() const {
  if (!(learning_rate > 0.0)) throw UsageError("rmsprop: learning_rate must be > 0");
  if (!(decay > 0.0 && decay < 1.0)) throw UsageError("rmsprop: decay must lie in (0,1)");
  if (weight_decay < 0.0) throw UsageError("rmsprop: weight_decay must be >= 0");
  if (!(epsilon > 0.0)) throw UsageError("rmsprop: epsilon must be > 0");
}

RmsPropState RmsPropState::zeros_like(const MlpModel& model, const RmsPropConfig& cfg) {
  cfg.validate();
  RmsPropState st;
  st.config = cfg;
  for (const auto& l : model.layers) {
    st.s_weights.push_back(Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
    st.s_bias.push_back(Eigen::VectorXd::Zero(l.bias.size()));
  }
  return st;
}

namespace {

template <typename Param, typename Grad, typename Acc>
void step_array(Param& theta, const Grad& grad, Acc& s, const RmsPropConfig& cfg) {
  const auto g = (grad.array() + cfg.weight_decay * theta.array()).eval();
  s.array() = (1.0 - cfg.decay) * s.array() + cfg.decay * g.square();
  theta.array() -= cfg.learning_rate * g / (s.array().sqrt() + cfg.epsilon);
}

}  // namespace

void rmsprop_step(MlpModel& model, const ParamGrads& grads, RmsPropState& state) {
  if (grads.weights.size() != model.layers.size() ||
      state.s_weights.size() != model.layers.size())
    throw UsageError("rmsprop_step: shape mismatch between model, grads and state");
  const RmsPropConfig& cfg = state.config;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    if (grads.weights[l].rows() != model.layers[l].weights.rows() ||
        grads.weights[l].cols() != model.layers[l].weights.cols() ||
        grads.bias[l].size() != model.layers[l].bias.size())
      throw UsageError("rmsprop_step: gradient shape mismatch in layer " + std::to_string(l));
    step_array(model.layers[l].weights, grads.weights[l], state.s_weights[l], cfg);
    step_array(model.layers[l].bias, grads.bias[l], state.s_bias[l], cfg);
  }
}

}  // namespace polyproj
