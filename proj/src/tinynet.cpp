#include "mvm/tinynet.hpp"

#include <cmath>
#include <random>

namespace mvm {

namespace {

Eigen::MatrixXd activate(const Eigen::MatrixXd &z, Activation activation, double slope) {
  switch (activation) {
  case Activation::identity:
    return z;
  case Activation::relu:
    return z.cwiseMax(0.0);
  case Activation::leaky_relu:
    return z.unaryExpr([slope](double x) { return x > 0.0 ? x : slope * x; });
  case Activation::sigmoid:
    return z.unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
  case Activation::tanh:
    return z.array().tanh().matrix();
  }
  throw InputError("unknown activation");
}

// dL/dz given dL/da, with z the pre-activation and a = activation(z).
Eigen::MatrixXd activation_backward(const Eigen::MatrixXd &grad, const Eigen::MatrixXd &z,
                                    const Eigen::MatrixXd &a, Activation activation,
                                    double slope) {
  switch (activation) {
  case Activation::identity:
    return grad;
  case Activation::relu:
    return grad.binaryExpr(z, [](double g, double x) { return x > 0.0 ? g : 0.0; });
  case Activation::leaky_relu:
    return grad.binaryExpr(z, [slope](double g, double x) { return x > 0.0 ? g : slope * g; });
  case Activation::sigmoid:
    return (grad.array() * a.array() * (1.0 - a.array())).matrix();
  case Activation::tanh:
    return (grad.array() * (1.0 - a.array().square())).matrix();
  }
  throw InputError("unknown activation");
}

} // namespace

std::string to_string(Activation activation) {
  switch (activation) {
  case Activation::identity:
    return "identity";
  case Activation::relu:
    return "relu";
  case Activation::leaky_relu:
    return "leaky_relu";
  case Activation::sigmoid:
    return "sigmoid";
  case Activation::tanh:
    return "tanh";
  }
  return "?";
}

Activation parse_activation(const std::string &name) {
  if (name == "identity") return Activation::identity;
  if (name == "relu") return Activation::relu;
  if (name == "leaky_relu") return Activation::leaky_relu;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "tanh") return Activation::tanh;
  throw InputError("unknown activation '" + name + "'");
}

void NetworkSpec::validate() const {
  require(input_dim >= 1, "network input dimension must be >= 1");
  require(!layers.empty(), "network needs at least one layer");
  for (const auto &layer : layers) {
    require(layer.out >= 1, "layer width must be >= 1");
    if (layer.activation == Activation::leaky_relu) {
      require(layer.slope > 0.0 && layer.slope < 1.0, "leaky_relu slope must lie in (0,1)");
    }
  }
}

NetworkSpec mlp_spec(Eigen::Index input_dim, const std::vector<Eigen::Index> &hidden,
                     Eigen::Index output_dim, Activation hidden_activation, double slope) {
  NetworkSpec spec;
  spec.input_dim = input_dim;
  for (auto width : hidden) {
    spec.layers.push_back({width, hidden_activation, slope});
  }
  spec.layers.push_back({output_dim, Activation::identity, slope});
  return spec;
}

const Eigen::MatrixXd &ForwardTape::output() const {
  require(!post.empty(), "empty forward tape");
  return post.back();
}

DenseNetwork::DenseNetwork(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  require(!layers_.empty(), "network needs at least one layer");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto &layer = layers_[i];
    require(layer.weight.rows() == layer.bias.size(), "bias length must equal layer width");
    if (i > 0) {
      require(layer.weight.cols() == layers_[i - 1].weight.rows(),
              "adjacent layer dimensions do not chain");
    }
    if (layer.activation == Activation::leaky_relu) {
      require(layer.slope > 0.0 && layer.slope < 1.0, "leaky_relu slope must lie in (0,1)");
    }
  }
}

Eigen::Index DenseNetwork::input_dim() const {
  return layers_.empty() ? 0 : layers_.front().weight.cols();
}

Eigen::Index DenseNetwork::output_dim() const {
  return layers_.empty() ? 0 : layers_.back().weight.rows();
}

Eigen::Index DenseNetwork::parameter_count() const {
  Eigen::Index count = 0;
  for (const auto &layer : layers_) {
    count += layer.weight.size() + layer.bias.size();
  }
  return count;
}

NetworkSpec DenseNetwork::spec() const {
  NetworkSpec spec;
  spec.input_dim = input_dim();
  for (const auto &layer : layers_) {
    spec.layers.push_back({layer.weight.rows(), layer.activation, layer.slope});
  }
  return spec;
}

namespace {

// Column by column, so a point's image does not depend on its position in the batch.
Eigen::MatrixXd affine(const DenseLayer &layer, const Eigen::MatrixXd &x) {
  Eigen::MatrixXd z(layer.weight.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    z.col(j).noalias() = layer.weight * x.col(j);
    z.col(j) += layer.bias;
  }
  return z;
}

} // namespace

Eigen::MatrixXd DenseNetwork::forward(const Eigen::MatrixXd &batch) const {
  require(!layers_.empty(), "forward on an empty network");
  require(batch.rows() == input_dim(), "batch dimension does not match network input");
  Eigen::MatrixXd x = batch;
  for (const auto &layer : layers_) {
    Eigen::MatrixXd z = affine(layer, x);
    x = activate(z, layer.activation, layer.slope);
  }
  return x;
}

ForwardTape DenseNetwork::forward_tape(const Eigen::MatrixXd &batch) const {
  require(!layers_.empty(), "forward on an empty network");
  require(batch.rows() == input_dim(), "batch dimension does not match network input");
  ForwardTape tape;
  tape.input = batch;
  tape.pre.reserve(layers_.size());
  tape.post.reserve(layers_.size());
  for (const auto &layer : layers_) {
    const Eigen::MatrixXd &x = tape.post.empty() ? tape.input : tape.post.back();
    Eigen::MatrixXd z = affine(layer, x);
    Eigen::MatrixXd a = activate(z, layer.activation, layer.slope);
    tape.pre.push_back(std::move(z));
    tape.post.push_back(std::move(a));
  }
  return tape;
}

Backprop DenseNetwork::backward(const ForwardTape &tape, const Eigen::MatrixXd &output_grad) const {
  require(!tape.empty(), "backward called before forward");
  require(tape.post.size() == layers_.size(), "forward tape does not belong to this network");
  const auto &out = tape.output();
  require(output_grad.rows() == out.rows() && output_grad.cols() == out.cols(),
          "output gradient shape does not match forward outputs");

  Backprop result;
  result.param_grad.resize(parameter_count());
  std::vector<Eigen::Index> offsets(layers_.size());
  Eigen::Index offset = 0;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    offsets[i] = offset;
    offset += layers_[i].weight.size() + layers_[i].bias.size();
  }

  Eigen::MatrixXd grad = output_grad;
  for (std::size_t idx = layers_.size(); idx-- > 0;) {
    const auto &layer = layers_[idx];
    Eigen::MatrixXd dz =
        activation_backward(grad, tape.pre[idx], tape.post[idx], layer.activation, layer.slope);
    const Eigen::MatrixXd &x = idx == 0 ? tape.input : tape.post[idx - 1];
    const Eigen::Index wsize = layer.weight.size();
    Eigen::Map<Eigen::MatrixXd>(result.param_grad.data() + offsets[idx], layer.weight.rows(),
                                layer.weight.cols()) = dz * x.transpose();
    result.param_grad.segment(offsets[idx] + wsize, layer.bias.size()) = dz.rowwise().sum();
    grad = layer.weight.transpose() * dz;
  }
  result.input_grad = std::move(grad);
  return result;
}

Eigen::VectorXd DenseNetwork::parameters() const {
  Eigen::VectorXd params(parameter_count());
  Eigen::Index offset = 0;
  for (const auto &layer : layers_) {
    params.segment(offset, layer.weight.size()) =
        Eigen::Map<const Eigen::VectorXd>(layer.weight.data(), layer.weight.size());
    offset += layer.weight.size();
    params.segment(offset, layer.bias.size()) = layer.bias;
    offset += layer.bias.size();
  }
  return params;
}

void DenseNetwork::set_parameters(const Eigen::VectorXd &params) {
  require(params.size() == parameter_count(), "parameter vector length mismatch");
  Eigen::Index offset = 0;
  for (auto &layer : layers_) {
    Eigen::Map<Eigen::VectorXd>(layer.weight.data(), layer.weight.size()) =
        params.segment(offset, layer.weight.size());
    offset += layer.weight.size();
    layer.bias = params.segment(offset, layer.bias.size());
    offset += layer.bias.size();
  }
}

DenseNetwork init_network(const NetworkSpec &spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<DenseLayer> layers;
  Eigen::Index fan_in = spec.input_dim;
  for (const auto &ls : spec.layers) {
    DenseLayer layer;
    const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
    layer.weight = Eigen::MatrixXd::NullaryExpr(ls.out, fan_in, [&] { return scale * normal(rng); });
    layer.bias = Eigen::VectorXd::Zero(ls.out);
    layer.activation = ls.activation;
    layer.slope = ls.slope;
    layers.push_back(std::move(layer));
    fan_in = ls.out;
  }
  return DenseNetwork(std::move(layers));
}

DenseNetwork linear_network(const Eigen::MatrixXd &weight, const Eigen::VectorXd &bias) {
  return DenseNetwork({DenseLayer{weight, bias, Activation::identity, 0.2}});
}

AdamState AdamState::fresh(Eigen::Index size, double learning_rate, double beta1, double beta2,
                           double epsilon) {
  require(beta1 >= 0.0 && beta1 < 1.0, "beta1 must lie in [0,1)");
  require(beta2 >= 0.0 && beta2 < 1.0, "beta2 must lie in [0,1)");
  AdamState state;
  state.m = Eigen::VectorXd::Zero(size);
  state.v = Eigen::VectorXd::Zero(size);
  state.learning_rate = learning_rate;
  state.beta1 = beta1;
  state.beta2 = beta2;
  state.epsilon = epsilon;
  return state;
}

void adam_step(AdamState &state, Eigen::VectorXd &params, const Eigen::VectorXd &grads) {
  require(params.size() == grads.size(), "adam: parameter/gradient length mismatch");
  require(state.m.size() == params.size() && state.v.size() == params.size(),
          "adam: optimizer state does not match parameter vector");
  if (!grads.allFinite()) {
    throw NonFiniteError("adam: non-finite gradient");
  }
  state.t += 1;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads.cwiseAbs2();
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  const double lr = state.learning_rate;
  const double eps = state.epsilon;
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

} // namespace mvm
