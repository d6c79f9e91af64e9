#pragma once

#include "mvm/common.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mvm {

enum class Activation { identity, relu, leaky_relu, sigmoid, tanh };

std::string to_string(Activation activation);
Activation parse_activation(const std::string &name);

struct LayerSpec {
  Eigen::Index out = 0;
  Activation activation = Activation::identity;
  double slope = 0.2; // leaky_relu only
};

struct NetworkSpec {
  Eigen::Index input_dim = 0;
  std::vector<LayerSpec> layers;

  Eigen::Index output_dim() const { return layers.empty() ? 0 : layers.back().out; }
  void validate() const;
};

/// in -> hidden... -> out, leaky-relu(slope) hidden units, identity output.
NetworkSpec mlp_spec(Eigen::Index input_dim, const std::vector<Eigen::Index> &hidden,
                     Eigen::Index output_dim, Activation hidden_activation = Activation::leaky_relu,
                     double slope = 0.2);

struct DenseLayer {
  Eigen::MatrixXd weight; // out x in
  Eigen::VectorXd bias;
  Activation activation = Activation::identity;
  double slope = 0.2;
};

/// Intermediates recorded by DenseNetwork::forward_tape, consumed by backward.
struct ForwardTape {
  Eigen::MatrixXd input;
  std::vector<Eigen::MatrixXd> pre;  // W x + b per layer
  std::vector<Eigen::MatrixXd> post; // activation(pre) per layer

  bool empty() const { return post.empty(); }
  const Eigen::MatrixXd &output() const;
};

struct Backprop {
  Eigen::VectorXd param_grad; // canonical order, see DenseNetwork::parameters
  Eigen::MatrixXd input_grad;
};

class DenseNetwork {
public:
  DenseNetwork() = default;
  explicit DenseNetwork(std::vector<DenseLayer> layers);

  Eigen::Index input_dim() const;
  Eigen::Index output_dim() const;
  Eigen::Index parameter_count() const;
  const std::vector<DenseLayer> &layers() const { return layers_; }
  NetworkSpec spec() const;

  /// Column-wise evaluation of a batch.
  Eigen::MatrixXd forward(const Eigen::MatrixXd &batch) const;
  ForwardTape forward_tape(const Eigen::MatrixXd &batch) const;

  /// Reverse-mode pass. output_grad holds dL/d(output) per column.
  Backprop backward(const ForwardTape &tape, const Eigen::MatrixXd &output_grad) const;

  /// Flat parameters: for each layer, weight (column-major) then bias.
  Eigen::VectorXd parameters() const;
  void set_parameters(const Eigen::VectorXd &params);

private:
  std::vector<DenseLayer> layers_;
};

/// He-scaled Gaussian weights (std = sqrt(2 / fan_in)), zero biases.
DenseNetwork init_network(const NetworkSpec &spec, std::uint64_t seed);

/// Single-layer identity network computing x -> A x + b.
DenseNetwork linear_network(const Eigen::MatrixXd &weight, const Eigen::VectorXd &bias);

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::int64_t t = 0;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState fresh(Eigen::Index size, double learning_rate, double beta1, double beta2,
                         double epsilon = 1e-8);
};

/// Bias-corrected Adam update applied in place. Throws NonFiniteError on NaN/inf gradients.
void adam_step(AdamState &state, Eigen::VectorXd &params, const Eigen::VectorXd &grads);

} // namespace mvm
