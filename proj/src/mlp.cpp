#include "polyproj/mlp.hpp"

#include <cmath>
#include <random>

#include "polyproj/errors.hpp"
#include "polyproj/rng.hpp"

namespace polyproj {

namespace {

Eigen::MatrixXd apply_activation(Activation act, const Eigen::MatrixXd& z) {
  switch (act) {
    case Activation::ReLU:
      return z.cwiseMax(0.0);
    case Activation::Tanh:
      return z.array().tanh().matrix();
    case Activation::Sigmoid:
      return (1.0 / (1.0 + (-z.array()).exp())).matrix();
  }
  return z;
}

// Elementwise derivative expressed through the pre-activation z.
Eigen::MatrixXd activation_grad(Activation act, const Eigen::MatrixXd& z) {
  switch (act) {
    case Activation::ReLU:
      return (z.array() > 0.0).cast<double>().matrix();
    case Activation::Tanh: {
      const Eigen::ArrayXXd t = z.array().tanh();
      return (1.0 - t * t).matrix();
    }
    case Activation::Sigmoid: {
      const Eigen::ArrayXXd s = 1.0 / (1.0 + (-z.array()).exp());
      return (s * (1.0 - s)).matrix();
    }
  }
  return Eigen::MatrixXd::Ones(z.rows(), z.cols());
}

Eigen::MatrixXd softmax_per_group(const Eigen::MatrixXd& z, int group) {
  Eigen::MatrixXd out(z.rows(), z.cols());
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    for (Eigen::Index g0 = 0; g0 < z.rows(); g0 += group) {
      const auto seg = z.col(c).segment(g0, group);
      const double mx = seg.maxCoeff();
      Eigen::VectorXd e = (seg.array() - mx).exp();
      out.col(c).segment(g0, group) = e / e.sum();
    }
  }
  return out;
}

}  // namespace

MlpModel MlpModel::random(const std::vector<int>& dims, Activation hidden,
                          OutputActivation output, int softmax_group, std::uint64_t seed) {
  if (dims.size() < 2) throw UsageError("MlpModel::random: need at least input and output dims");
  MlpModel model;
  model.hidden = hidden;
  model.output = output;
  model.softmax_group = softmax_group;
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int in = dims[l];
    const int out = dims[l + 1];
    // He scaling for ReLU hidden layers, Xavier-style otherwise.
    const bool last = l + 2 == dims.size();
    const double scale =
        (!last && hidden == Activation::ReLU) ? std::sqrt(2.0 / in) : std::sqrt(1.0 / in);
    MlpLayer layer;
    layer.weights.resize(out, in);
    for (int i = 0; i < out; ++i)
      for (int j = 0; j < in; ++j) layer.weights(i, j) = scale * standard_normal(rng);
    layer.bias = Eigen::VectorXd::Zero(out);
    model.layers.push_back(std::move(layer));
  }
  model.validate();
  return model;
}

int MlpModel::input_dim() const { return static_cast<int>(layers.front().weights.cols()); }
int MlpModel::output_dim() const { return static_cast<int>(layers.back().weights.rows()); }

std::vector<int> MlpModel::dims() const {
  std::vector<int> d;
  d.push_back(input_dim());
  for (const auto& l : layers) d.push_back(static_cast<int>(l.weights.rows()));
  return d;
}

void MlpModel::validate() const {
  if (layers.empty()) throw UsageError("model: no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].bias.size() != layers[l].weights.rows())
      throw UsageError("model: bias/weight shape mismatch in layer " + std::to_string(l));
    if (l > 0 && layers[l].weights.cols() != layers[l - 1].weights.rows())
      throw UsageError("model: layer dimensions do not chain at layer " + std::to_string(l));
    if (!layers[l].weights.allFinite() || !layers[l].bias.allFinite())
      throw UsageError("model: non-finite parameters in layer " + std::to_string(l));
  }
  if (output == OutputActivation::SoftmaxPerGroup &&
      (softmax_group <= 0 || output_dim() % softmax_group != 0))
    throw UsageError("model: softmax group size must divide the output dimension");
}

ParamGrads ParamGrads::zeros_like(const MlpModel& model) {
  ParamGrads g;
  for (const auto& l : model.layers) {
    g.weights.push_back(Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
    g.bias.push_back(Eigen::VectorXd::Zero(l.bias.size()));
  }
  return g;
}

Eigen::MatrixXd forward(const MlpModel& model, const Eigen::MatrixXd& x, ForwardCache* cache) {
  if (x.rows() != model.input_dim())
    throw UsageError("forward: input dimension " + std::to_string(x.rows()) +
                     " does not match model input " + std::to_string(model.input_dim()));
  Eigen::MatrixXd a = x;
  const std::size_t L = model.layers.size();
  if (cache) {
    cache->inputs.clear();
    cache->preacts.clear();
  }
  for (std::size_t l = 0; l < L; ++l) {
    if (cache) cache->inputs.push_back(a);
    Eigen::MatrixXd z = (model.layers[l].weights * a).colwise() + model.layers[l].bias;
    if (cache) cache->preacts.push_back(z);
    if (l + 1 < L) {
      a = apply_activation(model.hidden, z);
    } else if (model.output == OutputActivation::SoftmaxPerGroup) {
      a = softmax_per_group(z, model.softmax_group);
    } else {
      a = std::move(z);
    }
  }
  if (cache) cache->output = a;
  return a;
}

Eigen::VectorXd forward_one(const MlpModel& model, const Eigen::VectorXd& x,
                            ForwardCache* cache) {
  return forward(model, Eigen::MatrixXd(x), cache).col(0);
}

ParamGrads backward(const MlpModel& model, const ForwardCache& cache,
                    const Eigen::MatrixXd& output_cotangent) {
  const std::size_t L = model.layers.size();
  if (cache.preacts.size() != L || cache.inputs.size() != L)
    throw UsageError("backward: cache does not match model");
  if (output_cotangent.rows() != cache.output.rows() ||
      output_cotangent.cols() != cache.output.cols())
    throw UsageError("backward: cotangent shape mismatch");

  ParamGrads grads = ParamGrads::zeros_like(model);
  Eigen::MatrixXd da = output_cotangent;
  for (std::size_t li = L; li-- > 0;) {
    Eigen::MatrixXd dz;
    if (li + 1 == L) {
      if (model.output == OutputActivation::SoftmaxPerGroup) {
        // dz = p .* (da - <p, da> per group)
        const Eigen::MatrixXd& p = cache.output;
        dz.resize(da.rows(), da.cols());
        const int g = model.softmax_group;
        for (Eigen::Index c = 0; c < da.cols(); ++c) {
          for (Eigen::Index g0 = 0; g0 < da.rows(); g0 += g) {
            const auto pc = p.col(c).segment(g0, g);
            const auto dc = da.col(c).segment(g0, g);
            dz.col(c).segment(g0, g) =
                (pc.array() * dc.array()).matrix() - pc * pc.dot(dc);
          }
        }
      } else {
        dz = da;
      }
    } else {
      dz = da.cwiseProduct(activation_grad(model.hidden, cache.preacts[li]));
    }
    grads.weights[li] = dz * cache.inputs[li].transpose();
    grads.bias[li] = dz.rowwise().sum();
    if (li > 0) da = model.layers[li].weights.transpose() * dz;
  }
  return grads;
}

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::ReLU: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
  }
  return "relu";
}

Activation activation_from_name(const std::string& name) {
  if (name == "relu") return Activation::ReLU;
  if (name == "tanh") return Activation::Tanh;
  if (name == "sigmoid") return Activation::Sigmoid;
  throw UsageError("unknown activation '" + name + "'");
}

std::string output_activation_name(OutputActivation a) {
  return a == OutputActivation::SoftmaxPerGroup ? "softmax_per_group" : "identity";
}

OutputActivation output_activation_from_name(const std::string& name) {
  if (name == "identity") return OutputActivation::Identity;
  if (name == "softmax_per_group") return OutputActivation::SoftmaxPerGroup;
  throw UsageError("unknown output activation '" + name + "'");
}

}  // namespace polyproj
