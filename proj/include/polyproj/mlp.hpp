#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace polyproj {

enum class Activation { ReLU, Tanh, Sigmoid };
enum class OutputActivation { Identity, SoftmaxPerGroup };

struct MlpLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out
};

/// Plain feedforward net. Hidden layers share one activation; the output
/// layer is linear or a per-group softmax (groups of softmax_group
/// consecutive outputs, e.g. per-pixel class scores).
struct MlpModel {
  std::vector<MlpLayer> layers;
  Activation hidden = Activation::ReLU;
  OutputActivation output = OutputActivation::Identity;
  int softmax_group = 0;  // required > 0 and dividing the output dim for SoftmaxPerGroup

  static MlpModel random(const std::vector<int>& dims, Activation hidden,
                         OutputActivation output, int softmax_group, std::uint64_t seed);

  int input_dim() const;
  int output_dim() const;
  std::vector<int> dims() const;
  void validate() const;
};

// Everything backward() needs from a forward pass; columns are samples.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;   // input to each layer
  std::vector<Eigen::MatrixXd> preacts;  // pre-activation of each layer
  Eigen::MatrixXd output;
};

struct ParamGrads {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> bias;

  static ParamGrads zeros_like(const MlpModel& model);
};

Eigen::MatrixXd forward(const MlpModel& model, const Eigen::MatrixXd& x,
                        ForwardCache* cache = nullptr);
Eigen::VectorXd forward_one(const MlpModel& model, const Eigen::VectorXd& x,
                            ForwardCache* cache = nullptr);

// Reverse pass for a cotangent on the output (same shape as cache.output).
ParamGrads backward(const MlpModel& model, const ForwardCache& cache,
                    const Eigen::MatrixXd& output_cotangent);

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);
std::string output_activation_name(OutputActivation a);
OutputActivation output_activation_from_name(const std::string& name);

}  // namespace polyproj
