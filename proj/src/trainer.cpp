#include "mvm/trainer.hpp"

#include <cmath>

namespace mvm {

namespace {

constexpr int kEarlyStopWindow = 20;
constexpr double kEarlyStopRelativeChange = 0.01;

std::uint64_t derive_seed(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    stream};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

void check_finite(double value, const char *what) {
  if (!std::isfinite(value)) {
    throw NonFiniteError(std::string("non-finite ") + what);
  }
}

// Columns of `source` picked by `index`.
SampleSet gather(const SampleSet &source, const std::vector<Eigen::Index> &index) {
  SampleSet out(source.rows(), static_cast<Eigen::Index>(index.size()));
  for (std::size_t i = 0; i < index.size(); ++i) {
    out.col(static_cast<Eigen::Index>(i)) = source.col(index[i]);
  }
  return out;
}

} // namespace

std::string to_string(TrainMode mode) {
  return mode == TrainMode::supervised ? "supervised" : "unconditional";
}

TrainMode parse_train_mode(const std::string &name) {
  if (name == "unconditional") return TrainMode::unconditional;
  if (name == "supervised") return TrainMode::supervised;
  throw InputError("unknown mode '" + name + "'");
}

void TrainConfig::validate() const {
  manifold.validate();
  require(latent_dim >= 1 && embed_dim >= 1, "dimensions must be >= 1");
  require(batch_size >= 2, "batch_size must be >= 2");
  require(triplets() >= 1, "triplet_count must be >= 1");
  require(probe_size >= 2, "probe_size must be >= 2");
  for (double w : {lambda, alpha, gamma, lambda2, lambda3}) {
    require(std::isfinite(w) && w >= 0.0, "loss weights must be finite and >= 0");
  }
  for (const auto &opt : {generator_optimizer, metric_optimizer}) {
    require(opt.learning_rate > 0.0, "learning rates must be positive");
    require(opt.beta1 >= 0.0 && opt.beta1 < 1.0 && opt.beta2 >= 0.0 && opt.beta2 < 1.0,
            "Adam betas must lie in [0,1)");
  }
  require(epochs >= 0 && steps_per_epoch >= 1 && diagnostics_interval >= 0,
          "epochs >= 0, steps_per_epoch >= 1, diagnostics_interval >= 0 required");
  require(leaky_slope > 0.0 && leaky_slope < 1.0, "leaky_slope must lie in (0,1)");
  for (auto w : generator_hidden) require(w >= 1, "hidden widths must be >= 1");
  for (auto w : metric_hidden) require(w >= 1, "hidden widths must be >= 1");
  if (mode == TrainMode::supervised) {
    require(degrade_dim >= 1 && degrade_dim < ambient_dim(),
            "degrade_dim must lie in [1, ambient_dim)");
    require(degrade_noise >= 0.0, "degrade_noise must be >= 0");
  }
}

TraceRecord compute_trace(const SampleSet &real, const SampleSet &fake, const MetricHandle &metric,
                          bool paired) {
  require(real.cols() >= 1 && fake.cols() >= 1, "compute_trace: empty probe set");
  TraceRecord record;
  record.d_c = centroid_distance(real, fake, metric);
  record.d_g = std::abs(p_diameter(real, metric, 2.0) - p_diameter(fake, metric, 2.0));
  record.d_H = hausdorff_distance(real, fake, metric);
  if (paired) {
    record.d_p = pair_loss(real, fake, metric).value;
  }
  return record;
}

Spectrum distance_spectrum(const SampleSet &samples, const MetricHandle &metric,
                           Eigen::Index count) {
  const DistanceMatrix dm = distance_matrix(samples, metric, true);
  const auto all = eigenvalues_descending(dm.entries);
  Spectrum spectrum;
  const auto keep = static_cast<std::size_t>(std::min<Eigen::Index>(count, dm.entries.rows()));
  spectrum.top.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep));
  for (double ev : all) {
    spectrum.eigenvalue_sum += ev;
  }
  spectrum.matrix_trace = dm.entries.trace();
  return spectrum;
}

Trainer::Trainer(TrainConfig config)
    : config_([&] {
        config.validate();
        config.manifold.seed = derive_seed(config.seed, 0);
        return config;
      }()),
      sampler_(config_.manifold), rng_(derive_seed(config_.seed, 3)) {
  const auto D = config_.ambient_dim();
  generator_ = init_network(mlp_spec(config_.generator_input_dim(), config_.generator_hidden, D,
                                     Activation::leaky_relu, config_.leaky_slope),
                            derive_seed(config_.seed, 1));
  metric_ = init_network(mlp_spec(D, config_.metric_hidden, config_.embed_dim,
                                  Activation::leaky_relu, config_.leaky_slope),
                         derive_seed(config_.seed, 2));
  const auto &g = config_.generator_optimizer;
  const auto &m = config_.metric_optimizer;
  generator_state_ =
      AdamState::fresh(generator_.parameter_count(), g.learning_rate, g.beta1, g.beta2);
  metric_state_ = AdamState::fresh(metric_.parameter_count(), m.learning_rate, m.beta1, m.beta2);

  if (config_.mode == TrainMode::supervised) {
    projection_ = coordinate_projection(D, config_.degrade_dim);
  }

  std::mt19937_64 probe_rng(derive_seed(config_.seed, 4));
  probe_real_ = sampler_.sample(config_.probe_size, probe_rng);
  if (config_.mode == TrainMode::supervised) {
    probe_input_ = degrade(probe_real_, projection_, config_.degrade_noise, probe_rng);
  } else {
    probe_input_ = sample_prior({config_.latent_dim}, config_.probe_size, probe_rng);
  }
  initial_ = probe_trace(0, config_.diagnostics_interval > 0);
}

Trainer::RealBatch Trainer::draw_batch(Eigen::Index k) {
  RealBatch batch;
  batch.real = sampler_.sample(k, rng_);
  if (config_.mode == TrainMode::supervised) {
    batch.generator_input = degrade(batch.real, projection_, config_.degrade_noise, rng_);
  } else {
    batch.generator_input = sample_prior({config_.latent_dim}, k, rng_);
  }
  return batch;
}

GeneratorLosses Trainer::generator_step() {
  const RealBatch batch = draw_batch(config_.batch_size);
  const ForwardTape gen_tape = generator_.forward_tape(batch.generator_input);
  const SampleSet &fake = gen_tape.output();

  const Eigen::MatrixXd embedded_real = metric_.forward(batch.real);
  const ForwardTape metric_tape = metric_.forward_tape(fake);
  const Eigen::MatrixXd &embedded_fake = metric_tape.output();

  GeneratorLosses losses;
  const LossValue mm = mm_loss(embedded_real, embedded_fake, config_.lambda, config_.match_mode);
  losses.mm = mm.value;
  check_finite(mm.value, "manifold matching loss");
  // Pull dL/dE_F back to dL/dX_F; the metric's own parameter gradient is discarded.
  Eigen::MatrixXd mm_grad_fake = metric_.backward(metric_tape, mm.grads[1]).input_grad;

  Eigen::MatrixXd grad_fake;
  if (config_.mode == TrainMode::supervised) {
    const LossValue img = img_loss(batch.real, fake);
    const LossValue pair = pair_loss(embedded_real, embedded_fake);
    Eigen::MatrixXd pair_grad_fake = metric_.backward(metric_tape, pair.grads[1]).input_grad;
    const LossValue total =
        gen_total_loss(LossValue{img.value, {img.grads[1]}},
                       LossValue{pair.value, {std::move(pair_grad_fake)}},
                       LossValue{mm.value, {std::move(mm_grad_fake)}}, config_.lambda2,
                       config_.lambda3);
    losses.img = img.value;
    losses.pair = pair.value;
    losses.total = total.value;
    grad_fake = total.grads[0];
  } else {
    losses.total = mm.value;
    grad_fake = std::move(mm_grad_fake);
  }
  check_finite(losses.total, "generator loss");

  const Backprop gen_grad = generator_.backward(gen_tape, grad_fake);
  Eigen::VectorXd theta = generator_.parameters();
  adam_step(generator_state_, theta, gen_grad.param_grad);
  generator_.set_parameters(theta);
  return losses;
}

double Trainer::metric_step() {
  const Eigen::Index k = config_.batch_size;
  const Eigen::Index l = config_.triplets();
  const RealBatch batch = draw_batch(k);
  const SampleSet fake = generator_.forward(batch.generator_input);

  // anchor != positive within the real batch; negatives drawn from the generated batch
  std::uniform_int_distribution<Eigen::Index> pick(0, k - 1);
  std::uniform_int_distribution<Eigen::Index> pick_other(0, k - 2);
  std::vector<Eigen::Index> anchors(static_cast<std::size_t>(l));
  std::vector<Eigen::Index> positives(anchors.size());
  std::vector<Eigen::Index> negatives(anchors.size());
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    anchors[i] = pick(rng_);
    const Eigen::Index other = pick_other(rng_);
    positives[i] = other >= anchors[i] ? other + 1 : other;
    negatives[i] = pick(rng_);
  }

  const ForwardTape tape_a = metric_.forward_tape(gather(batch.real, anchors));
  const ForwardTape tape_p = metric_.forward_tape(gather(batch.real, positives));
  const ForwardTape tape_n = metric_.forward_tape(gather(fake, negatives));
  const LossValue apn = apn_loss_batch(tape_a.output(), tape_p.output(), tape_n.output(),
                                       config_.alpha, config_.gamma);
  check_finite(apn.value, "triplet loss");

  Eigen::VectorXd grad = metric_.backward(tape_a, apn.grads[0]).param_grad;
  grad += metric_.backward(tape_p, apn.grads[1]).param_grad;
  grad += metric_.backward(tape_n, apn.grads[2]).param_grad;
  Eigen::VectorXd w = metric_.parameters();
  adam_step(metric_state_, w, grad);
  metric_.set_parameters(w);
  return apn.value;
}

SampleSet Trainer::probe_fake() const { return generator_.forward(probe_input_); }

TraceRecord Trainer::probe_trace(int epoch, bool with_spectrum) const {
  const MetricHandle metric = MetricHandle::pullback(metric_);
  const SampleSet fake = probe_fake();
  const bool paired = config_.mode == TrainMode::supervised;
  TraceRecord record = compute_trace(probe_real_, fake, metric, paired);
  record.epoch = epoch;
  if (paired) {
    record.loss_img = img_loss(probe_real_, fake).value;
  }
  if (with_spectrum) {
    record.spectrum = distance_spectrum(probe_real_, metric, 10);
  }
  return record;
}

TrainResult Trainer::snapshot(std::vector<TraceRecord> trace) const {
  return TrainResult{generator_, metric_, generator_state_, metric_state_, initial_,
                     std::move(trace)};
}

TrainResult Trainer::run(const EpochObserver &observer) {
  std::vector<TraceRecord> trace;
  trace.reserve(static_cast<std::size_t>(config_.epochs));
  const bool supervised = config_.mode == TrainMode::supervised;

  for (int epoch = 1; epoch <= config_.epochs; ++epoch) {
    double sum_mm = 0.0;
    double sum_apn = 0.0;
    double sum_gen = 0.0;
    for (int step = 0; step < config_.steps_per_epoch; ++step) {
      DenseNetwork generator_before = generator_;
      DenseNetwork metric_before = metric_;
      AdamState generator_state_before = generator_state_;
      AdamState metric_state_before = metric_state_;
      try {
        const GeneratorLosses g = generator_step();
        sum_mm += g.mm;
        sum_gen += g.total;
        sum_apn += metric_step();
      } catch (const NonFiniteError &err) {
        throw TrainingAborted("epoch " + std::to_string(epoch) + ", step " +
                                  std::to_string(step) + ": " + err.what(),
                              TrainResult{std::move(generator_before), std::move(metric_before),
                                          std::move(generator_state_before),
                                          std::move(metric_state_before), initial_, trace});
      }
    }
    const double steps = static_cast<double>(config_.steps_per_epoch);
    const bool spectrum_due =
        config_.diagnostics_interval > 0 && epoch % config_.diagnostics_interval == 0;
    TraceRecord record = probe_trace(epoch, spectrum_due);
    record.loss_mm = sum_mm / steps;
    record.loss_apn = sum_apn / steps;
    if (supervised) {
      record.loss_gen = sum_gen / steps;
    }
    trace.push_back(std::move(record));

    if (observer) {
      const SampleSet fake = probe_fake();
      observer(EpochView{trace.back(), generator_, metric_, fake});
    }

    if (config_.early_stop && epoch > kEarlyStopWindow) {
      const double then = trace[trace.size() - 1 - kEarlyStopWindow].d_H;
      const double now = trace.back().d_H;
      if (std::abs(now - then) < kEarlyStopRelativeChange * then) {
        break;
      }
    }
  }
  return snapshot(std::move(trace));
}

TrainResult train_unconditional(const TrainConfig &config, const EpochObserver &observer) {
  require(config.mode == TrainMode::unconditional, "train_unconditional: mode is not unconditional");
  Trainer trainer(config);
  return trainer.run(observer);
}

TrainResult train_supervised(const TrainConfig &config, const EpochObserver &observer) {
  require(config.mode == TrainMode::supervised, "train_supervised: mode is not supervised");
  Trainer trainer(config);
  return trainer.run(observer);
}

TrainResult train(const TrainConfig &config, const EpochObserver &observer) {
  return config.mode == TrainMode::supervised ? train_supervised(config, observer)
                                              : train_unconditional(config, observer);
}

} // namespace mvm
