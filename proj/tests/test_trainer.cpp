#include "mvm/io.hpp"
#include "mvm/losses.hpp"
#include "mvm/trainer.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <sstream>

using namespace mvm;

namespace {

TrainConfig small_config() {
  TrainConfig c;
  c.manifold.kind = ManifoldKind::circle;
  c.manifold.ambient_dim = 2;
  c.batch_size = 16;
  c.epochs = 4;
  c.steps_per_epoch = 5;
  c.diagnostics_interval = 2;
  c.probe_size = 32;
  c.generator_hidden = {8};
  c.metric_hidden = {8};
  c.seed = 5;
  return c;
}

TrainConfig small_supervised() {
  TrainConfig c = small_config();
  c.mode = TrainMode::supervised;
  c.manifold.ambient_dim = 3;
  c.degrade_dim = 2;
  return c;
}

std::string trace_csv(const TrainResult &r) {
  std::ostringstream out;
  write_trace_csv(out, r.trace);
  return out.str();
}

SampleSet line(std::initializer_list<double> xs) {
  SampleSet s(1, static_cast<Eigen::Index>(xs.size()));
  Eigen::Index j = 0;
  for (double x : xs) s(0, j++) = x;
  return s;
}

} // namespace

TEST(ComputeTrace, Examples) {
  const auto id = linear_network(Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1));
  const auto m = MetricHandle::pullback(id);
  const auto r = compute_trace(line({0, 2}), line({1, 3}), m, false);
  EXPECT_DOUBLE_EQ(r.d_c, 1.0);
  EXPECT_EQ(r.d_g, 0.0);
  EXPECT_DOUBLE_EQ(r.d_H, 1.0);
  EXPECT_TRUE(std::isnan(r.d_p));

  const auto same = compute_trace(line({0, 2}), line({0, 2}), m, true);
  EXPECT_EQ(same.d_c, 0.0);
  EXPECT_EQ(same.d_g, 0.0);
  EXPECT_EQ(same.d_H, 0.0);
  EXPECT_EQ(same.d_p, 0.0);
  EXPECT_THROW(compute_trace(line({0}), SampleSet(1, 0), m, false), InputError);
}

TEST(ComputeTrace, AgreesBitwiseWithDirectCalls) {
  std::mt19937_64 rng(1);
  const auto net = init_network(mlp_spec(3, {8}, 4), 2);
  const auto m = MetricHandle::pullback(net);
  const SampleSet a = oracle::gaussian(3, 10, rng), b = oracle::gaussian(3, 10, rng);
  const auto r = compute_trace(a, b, m, true);
  auto same = [](double x, double y) { return std::memcmp(&x, &y, sizeof x) == 0; };
  EXPECT_TRUE(same(r.d_c, centroid_distance(a, b, m)));
  EXPECT_TRUE(same(r.d_g, std::abs(p_diameter(a, m, 2.0) - p_diameter(b, m, 2.0))));
  EXPECT_TRUE(same(r.d_H, hausdorff_distance(a, b, m)));
  EXPECT_TRUE(same(r.d_p, pair_loss(a, b, m).value));
}

TEST(Train, ZeroEpochsLeavesNetworksUnchanged) {
  TrainConfig c = small_config();
  c.epochs = 0;
  const Trainer fresh(c);
  const auto r = train(c);
  EXPECT_TRUE(r.trace.empty());
  EXPECT_EQ(r.generator.parameters(), fresh.generator().parameters());
  EXPECT_EQ(r.metric.parameters(), fresh.metric().parameters());
}

TEST(Train, DeterministicTraces) {
  for (const auto &c : {small_config(), small_supervised()}) {
    const auto a = train(c), b = train(c);
    EXPECT_EQ(trace_csv(a), trace_csv(b));
    EXPECT_EQ(a.generator.parameters(), b.generator.parameters());
    EXPECT_EQ(a.metric.parameters(), b.metric.parameters());
  }
  TrainConfig other = small_config();
  other.seed = 6;
  EXPECT_NE(trace_csv(train(small_config())), trace_csv(train(other)));
}

TEST(Train, TraceShape) {
  const auto r = train(small_config());
  ASSERT_EQ(r.trace.size(), 4u);
  for (std::size_t i = 0; i < r.trace.size(); ++i) {
    const auto &t = r.trace[i];
    EXPECT_EQ(t.epoch, static_cast<int>(i + 1));
    EXPECT_GE(t.d_c, 0.0);
    EXPECT_GE(t.d_H, 0.0);
    EXPECT_TRUE(std::isnan(t.d_p));
    EXPECT_TRUE(std::isnan(t.loss_gen));
    EXPECT_FALSE(std::isnan(t.loss_apn));
    EXPECT_EQ(t.spectrum.has_value(), t.epoch % 2 == 0);
  }
  EXPECT_TRUE(r.initial.spectrum.has_value());
}

TEST(Train, SupervisedTracesCarryPairDistance) {
  const auto r = train(small_supervised());
  for (const auto &t : r.trace) {
    EXPECT_GE(t.d_p, 0.0);
    EXPECT_FALSE(std::isnan(t.loss_gen));
    EXPECT_FALSE(std::isnan(t.loss_img));
  }
}

TEST(Train, SpectrumIsRealAndSumsToTrace) {
  const auto r = train(small_config());
  for (const auto &t : r.trace) {
    if (!t.spectrum) continue;
    EXPECT_EQ(t.spectrum->top.size(), 10u);
    EXPECT_TRUE(std::is_sorted(t.spectrum->top.rbegin(), t.spectrum->top.rend()));
    EXPECT_NEAR(t.spectrum->eigenvalue_sum, t.spectrum->matrix_trace, 1e-8);
  }
}

TEST(Train, ModeMismatchIsInputError) {
  EXPECT_THROW(train_supervised(small_config()), InputError);
  EXPECT_THROW(train_unconditional(small_supervised()), InputError);
}

TEST(Trainer, OptimizerStatesMatchTheirOwnNetworks) {
  Trainer t(small_config());
  t.generator_step();
  t.metric_step();
  EXPECT_EQ(t.generator_state().m.size(), t.generator().parameter_count());
  EXPECT_EQ(t.metric_state().m.size(), t.metric().parameter_count());
  EXPECT_NE(t.generator().parameter_count(), t.metric().parameter_count());
  EXPECT_EQ(t.generator_state().t, 1);
  EXPECT_EQ(t.metric_state().t, 1);
  EXPECT_EQ(t.generator_state().beta1, 0.0);
  EXPECT_EQ(t.metric_state().beta1, 0.5);
}

TEST(Trainer, UpdatesAreIsolated) {
  Trainer t(small_config());
  const auto g0 = t.generator().parameters();
  const auto w0 = t.metric().parameters();
  t.generator_step();
  EXPECT_NE(t.generator().parameters(), g0);
  EXPECT_EQ(t.metric().parameters(), w0);
  const auto g1 = t.generator().parameters();
  t.metric_step();
  EXPECT_EQ(t.generator().parameters(), g1);
  EXPECT_NE(t.metric().parameters(), w0);
}

TEST(Trainer, AblationModesRun) {
  for (auto mode : {MatchMode::centroid_only, MatchMode::diameter_only}) {
    TrainConfig c = small_config();
    c.match_mode = mode;
    const auto r = train(c);
    EXPECT_EQ(r.trace.size(), 4u);
  }
}

TEST(Trainer, ObserverSeesEveryEpoch) {
  std::vector<int> epochs;
  const auto r = train(small_config(), [&](const EpochView &v) {
    epochs.push_back(v.record.epoch);
    EXPECT_EQ(v.probe_fake.cols(), 32);
  });
  EXPECT_EQ(epochs, (std::vector<int>{1, 2, 3, 4}));
}

TEST(Trainer, NonFiniteAbortKeepsLastValidNetworks) {
  TrainConfig c = small_config();
  c.generator_optimizer.learning_rate = 1e200;
  c.metric_optimizer.learning_rate = 1e200;
  try {
    train(c);
    FAIL() << "expected TrainingAborted";
  } catch (const TrainingAborted &err) {
    EXPECT_TRUE(err.last_valid().generator.parameters().allFinite());
    EXPECT_TRUE(err.last_valid().metric.parameters().allFinite());
    EXPECT_NE(std::string(err.what()).find("non-finite"), std::string::npos);
  }
}

TEST(Trainer, EarlyStop) {
  TrainConfig c = small_config();
  c.epochs = 200;
  c.early_stop = true;
  c.generator_optimizer.learning_rate = 1e-9;
  c.metric_optimizer.learning_rate = 1e-9;
  const auto r = train(c);
  EXPECT_EQ(r.trace.size(), 21u);
}

// Pure regression: linear generator, noiseless degradation that is invertible on the
// plane the circle spans. Seed 3 keeps that inverse well conditioned (singular value
// ratio ~0.47 on the kept coordinates).
TEST(Train, LinearSupervisedRegressionConverges) {
  TrainConfig c;
  c.mode = TrainMode::supervised;
  c.manifold.kind = ManifoldKind::circle;
  c.manifold.ambient_dim = 3;
  c.degrade_dim = 2;
  c.lambda2 = 0.0;
  c.lambda3 = 0.0;
  c.generator_hidden = {};
  c.metric_hidden = {8};
  c.batch_size = 32;
  c.generator_optimizer = {3e-3, 0.9, 0.999};
  c.epochs = 100;
  c.steps_per_epoch = 20;
  c.diagnostics_interval = 0;
  c.seed = 3;
  const auto r = train(c);
  EXPECT_LT(r.trace.back().loss_img, 1e-3);
}
