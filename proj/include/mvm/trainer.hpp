#pragma once

#include "mvm/common.hpp"
#include "mvm/losses.hpp"
#include "mvm/metric_measure.hpp"
#include "mvm/synthdata.hpp"
#include "mvm/tinynet.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <vector>

namespace mvm {

enum class TrainMode { unconditional, supervised };

std::string to_string(TrainMode mode);
TrainMode parse_train_mode(const std::string &name);

struct OptimizerConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
};

/// Every hyperparameter of a run. Desk-scale defaults; the optimizer decays and
/// gamma/lambda follow the unconditional setup (generator beta1=0, beta2=0.9; metric
/// beta1=0.5, beta2=0.999; lr 1e-4).
struct TrainConfig {
  TrainMode mode = TrainMode::unconditional;
  MatchMode match_mode = MatchMode::both;

  Eigen::Index latent_dim = 4; // m (unconditional generator input)
  Eigen::Index embed_dim = 4;  // n
  Eigen::Index batch_size = 64;
  Eigen::Index triplet_count = 0; // l; 0 means "same as batch_size"

  double lambda = 1.0;
  double alpha = 1.0;
  double gamma = 0.01;
  double lambda2 = 1e-3;
  double lambda3 = 1e-3;

  OptimizerConfig generator_optimizer{1e-4, 0.0, 0.9};
  OptimizerConfig metric_optimizer{1e-4, 0.5, 0.999};

  int epochs = 200;
  int steps_per_epoch = 20;
  int diagnostics_interval = 10; // 0 disables the eigen spectrum
  Eigen::Index probe_size = 256;

  std::vector<Eigen::Index> generator_hidden{64, 64}; // empty: single linear layer
  std::vector<Eigen::Index> metric_hidden{64, 64};
  double leaky_slope = 0.2;

  ManifoldSpec manifold; // ambient_dim is D

  // supervised mode: x_L = first degrade_dim coordinates of x_R, plus noise
  Eigen::Index degrade_dim = 1;
  double degrade_noise = 0.0;

  bool early_stop = false; // stop once d_H moves < 1% over 20 epochs
  std::uint64_t seed = 1;

  Eigen::Index ambient_dim() const { return manifold.ambient_dim; }
  Eigen::Index triplets() const { return triplet_count > 0 ? triplet_count : batch_size; }
  Eigen::Index generator_input_dim() const {
    return mode == TrainMode::supervised ? degrade_dim : latent_dim;
  }
  void validate() const;
};

struct Spectrum {
  std::vector<double> top;    // up to 10 largest eigenvalues, descending
  double eigenvalue_sum = 0.0; // sum over the whole spectrum
  double matrix_trace = 0.0;
};

/// Diagnostics on the fixed probe batch under the current pullback metric.
/// Fields that do not apply to the run's mode are NaN.
struct TraceRecord {
  int epoch = 0;
  double d_c = 0.0;
  double d_g = 0.0;
  double d_p = std::numeric_limits<double>::quiet_NaN();
  double d_H = 0.0;
  double loss_mm = std::numeric_limits<double>::quiet_NaN();
  double loss_apn = std::numeric_limits<double>::quiet_NaN();
  double loss_gen = std::numeric_limits<double>::quiet_NaN();
  double loss_img = std::numeric_limits<double>::quiet_NaN(); // probe L_img, supervised only
  std::optional<Spectrum> spectrum;
};

/// d_c, d_g, d_H (and d_p when paired) between two probe sets under `metric`.
TraceRecord compute_trace(const SampleSet &real, const SampleSet &fake, const MetricHandle &metric,
                          bool paired);

/// Top-10 spectrum of the normalized distance matrix of `samples` under `metric`.
Spectrum distance_spectrum(const SampleSet &samples, const MetricHandle &metric,
                           Eigen::Index count = 10);

struct GeneratorLosses {
  double mm = 0.0;
  double img = std::numeric_limits<double>::quiet_NaN();
  double pair = std::numeric_limits<double>::quiet_NaN();
  double total = 0.0; // the quantity the generator minimized
};

struct TrainResult {
  DenseNetwork generator;
  DenseNetwork metric;
  AdamState generator_state;
  AdamState metric_state;
  TraceRecord initial; // probe diagnostics before the first update
  std::vector<TraceRecord> trace;
};

/// Raised when a loss or gradient turns non-finite. Carries the networks as they were
/// at the start of the failing step, plus the trace so far.
class TrainingAborted : public std::runtime_error {
public:
  TrainingAborted(const std::string &what, TrainResult last_valid)
      : std::runtime_error(what), last_valid_(std::move(last_valid)) {}
  const TrainResult &last_valid() const { return last_valid_; }

private:
  TrainResult last_valid_;
};

/// Called after each epoch's record is appended.
struct EpochView {
  const TraceRecord &record;
  const DenseNetwork &generator;
  const DenseNetwork &metric;
  const SampleSet &probe_fake;
};
using EpochObserver = std::function<void(const EpochView &)>;

/// Alternating optimization: one generator update, then one metric update, per step.
class Trainer {
public:
  explicit Trainer(TrainConfig config);

  /// Updates only the generator. Unconditional: L_MM. Supervised: L_img + l2 L_pair + l3 L_MM.
  GeneratorLosses generator_step();
  /// Updates only the metric network with the summed L_apn over l triplets.
  double metric_step();

  /// Diagnostics on the fixed probe batch.
  TraceRecord probe_trace(int epoch, bool with_spectrum) const;
  SampleSet probe_fake() const;

  TrainResult run(const EpochObserver &observer = {});

  const TrainConfig &config() const { return config_; }
  const DenseNetwork &generator() const { return generator_; }
  const DenseNetwork &metric() const { return metric_; }
  const AdamState &generator_state() const { return generator_state_; }
  const AdamState &metric_state() const { return metric_state_; }
  const SampleSet &probe_real() const { return probe_real_; }

private:
  struct RealBatch {
    SampleSet real;
    SampleSet generator_input; // latent noise or degraded copies of `real`
  };
  RealBatch draw_batch(Eigen::Index k);
  TrainResult snapshot(std::vector<TraceRecord> trace) const;

  TrainConfig config_;
  ManifoldSampler sampler_;
  Eigen::MatrixXd projection_;
  DenseNetwork generator_;
  DenseNetwork metric_;
  AdamState generator_state_;
  AdamState metric_state_;
  std::mt19937_64 rng_;
  SampleSet probe_real_;
  SampleSet probe_input_;
  TraceRecord initial_;
};

TrainResult train_unconditional(const TrainConfig &config, const EpochObserver &observer = {});
TrainResult train_supervised(const TrainConfig &config, const EpochObserver &observer = {});

/// Mode-dispatching entry point.
TrainResult train(const TrainConfig &config, const EpochObserver &observer = {});

} // namespace mvm
