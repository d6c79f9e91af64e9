#include "mvm/gradcheck.hpp"

#include "mvm/losses.hpp"
#include "mvm/tinynet.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace mvm {

namespace {

constexpr Eigen::Index kLatent = 2;
constexpr Eigen::Index kAmbient = 3;
constexpr Eigen::Index kEmbed = 3;
constexpr Eigen::Index kHidden = 10;
constexpr Eigen::Index kBatch = 6;

Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64 &rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  return Eigen::MatrixXd::NullaryExpr(rows, cols, [&] { return normal(rng); });
}

Eigen::VectorXd flatten(const Eigen::MatrixXd &m) {
  return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

Eigen::MatrixXd unflatten(const Eigen::VectorXd &v, Eigen::Index offset, Eigen::Index rows,
                          Eigen::Index cols) {
  return Eigen::Map<const Eigen::MatrixXd>(v.data() + offset, rows, cols);
}

int sign_of(double x) { return x > 0.0 ? 1 : (x < 0.0 ? -1 : 0); }

// Views a flat variable vector as [generator params?, metric params?, one input matrix].
struct Layout {
  DenseNetwork generator;
  DenseNetwork metric;
  bool has_generator = false;
  bool has_metric = false;
  Eigen::Index input_rows = 0;
  Eigen::Index input_cols = 0;

  Eigen::Index gen_size() const { return has_generator ? generator.parameter_count() : 0; }
  Eigen::Index metric_size() const { return has_metric ? metric.parameter_count() : 0; }

  struct Unpacked {
    DenseNetwork generator;
    DenseNetwork metric;
    Eigen::MatrixXd input;
  };

  Unpacked unpack(const Eigen::VectorXd &x) const {
    Unpacked u{generator, metric, {}};
    Eigen::Index offset = 0;
    if (has_generator) {
      u.generator.set_parameters(x.segment(offset, gen_size()));
      offset += gen_size();
    }
    if (has_metric) {
      u.metric.set_parameters(x.segment(offset, metric_size()));
      offset += metric_size();
    }
    u.input = unflatten(x, offset, input_rows, input_cols);
    return u;
  }

  Eigen::VectorXd pack(const Eigen::MatrixXd &input) const {
    Eigen::VectorXd x(gen_size() + metric_size() + input.size());
    Eigen::Index offset = 0;
    if (has_generator) {
      x.segment(offset, gen_size()) = generator.parameters();
      offset += gen_size();
    }
    if (has_metric) {
      x.segment(offset, metric_size()) = metric.parameters();
      offset += metric_size();
    }
    x.segment(offset, input.size()) = flatten(input);
    return x;
  }

  Eigen::VectorXd join(const Eigen::VectorXd &gen_grad, const Eigen::VectorXd &metric_grad,
                       const Eigen::MatrixXd &input_grad) const {
    Eigen::VectorXd g(gen_size() + metric_size() + input_grad.size());
    Eigen::Index offset = 0;
    if (has_generator) {
      g.segment(offset, gen_size()) = gen_grad;
      offset += gen_size();
    }
    if (has_metric) {
      g.segment(offset, metric_size()) = metric_grad;
      offset += metric_size();
    }
    g.segment(offset, input_grad.size()) = flatten(input_grad);
    return g;
  }

  std::vector<std::pair<std::string, Eigen::Index>> segments(const std::string &input_name) const {
    std::vector<std::pair<std::string, Eigen::Index>> s;
    if (has_generator) s.emplace_back("generator", gen_size());
    if (has_metric) s.emplace_back("metric", metric_size());
    s.emplace_back(input_name, input_rows * input_cols);
    return s;
  }
};

DenseNetwork random_net(Eigen::Index in, Eigen::Index out, std::mt19937_64 &rng) {
  DenseNetwork net = init_network(mlp_spec(in, {kHidden}, out, Activation::tanh), rng());
  // non-zero biases so their partials are exercised away from the origin
  Eigen::VectorXd params = net.parameters();
  params += 0.1 * gaussian(params.size(), 1, rng);
  net.set_parameters(params);
  return net;
}

GradProblem mm_problem(std::mt19937_64 &rng) {
  Layout layout;
  layout.generator = random_net(kLatent, kAmbient, rng);
  layout.metric = random_net(kAmbient, kEmbed, rng);
  layout.has_generator = layout.has_metric = true;
  layout.input_rows = kLatent;
  layout.input_cols = kBatch;
  const Eigen::MatrixXd real = gaussian(kAmbient, kBatch + 2, rng);
  const double lambda = 1.0;

  GradProblem p;
  p.name = "mm_loss";
  p.x0 = layout.pack(gaussian(kLatent, kBatch, rng));
  p.segments = layout.segments("latent");
  p.value = [=](const Eigen::VectorXd &x) {
    const auto u = layout.unpack(x);
    return mm_loss(u.metric.forward(real), u.metric.forward(u.generator.forward(u.input)), lambda)
        .value;
  };
  p.gradient = [=](const Eigen::VectorXd &x) {
    const auto u = layout.unpack(x);
    const ForwardTape gen = u.generator.forward_tape(u.input);
    const ForwardTape emb_real = u.metric.forward_tape(real);
    const ForwardTape emb_fake = u.metric.forward_tape(gen.output());
    const LossValue loss = mm_loss(emb_real.output(), emb_fake.output(), lambda);
    const Backprop br = u.metric.backward(emb_real, loss.grads[0]);
    const Backprop bf = u.metric.backward(emb_fake, loss.grads[1]);
    const Backprop bg = u.generator.backward(gen, bf.input_grad);
    return layout.join(bg.param_grad, br.param_grad + bf.param_grad, bg.input_grad);
  };
  p.piece = [=](const Eigen::VectorXd &x) {
    const auto u = layout.unpack(x);
    const Eigen::MatrixXd er = u.metric.forward(real);
    const Eigen::MatrixXd ef = u.metric.forward(u.generator.forward(u.input));
    return std::vector<int>{sign_of(p_diameter(er, 2.0) - p_diameter(ef, 2.0))};
  };
  return p;
}

// Triplet-style problems: variables are [metric params, anchor | positive | negative].
GradProblem triplet_problem(std::mt19937_64 &rng, double gamma) {
  Layout layout;
  layout.metric = random_net(kAmbient, kEmbed, rng);
  layout.has_metric = true;
  layout.input_rows = kAmbient;
  layout.input_cols = 3;
  const Eigen::MatrixXd points = gaussian(kAmbient, 3, rng);

  // Margin chosen so the hinge sits 0.5 inside its active region at the base point.
  const Eigen::MatrixXd e = layout.metric.forward(points);
  const Eigen::VectorXd to_pos = e.col(1) - e.col(0);
  const Eigen::VectorXd to_neg = e.col(2) - e.col(0);
  const double cosine = to_neg.dot(to_pos) / (to_neg.norm() * to_pos.norm());
  const double raw = to_pos.squaredNorm() - to_neg.squaredNorm() - gamma * cosine;
  const double alpha = std::max(0.0, -raw) + 0.5;

  GradProblem p;
  p.name = gamma == 0.0 ? "triplet_loss" : "apn_loss";
  p.x0 = layout.pack(points);
  p.segments = layout.segments("triplet");
  p.value = [=](const Eigen::VectorXd &x) {
    const auto u = layout.unpack(x);
    const Eigen::MatrixXd em = u.metric.forward(u.input);
    return gamma == 0.0 ? triplet_loss(em.col(0), em.col(1), em.col(2), alpha).value
                        : apn_loss(em.col(0), em.col(1), em.col(2), alpha, gamma).value;
  };
  p.gradient = [=](const Eigen::VectorXd &x) {
    const auto u = layout.unpack(x);
    const ForwardTape tape = u.metric.forward_tape(u.input);
    const Eigen::MatrixXd &em = tape.output();
    const LossValue loss = gamma == 0.0
                               ? triplet_loss(em.col(0), em.col(1), em.col(2), alpha)
                               : apn_loss(em.col(0), em.col(1), em.col(2), alpha, gamma);
    Eigen::MatrixXd out_grad(em.rows(), 3);
    for (int c = 0; c < 3; ++c) out_grad.col(c) = loss.grads[static_cast<std::size_t>(c)];
    const Backprop b = u.metric.backward(tape, out_grad);
    return layout.join({}, b.param_grad, b.input_grad);
  };
  p.piece = [=](const Eigen::VectorXd &x) {
    const auto u = layout.unpack(x);
    const Eigen::MatrixXd em = u.metric.forward(u.input);
    return std::vector<int>{apn_loss(em.col(0), em.col(1), em.col(2), alpha, gamma).value > 0.0};
  };
  return p;
}

GradProblem pair_problem(std::mt19937_64 &rng) {
  Layout layout;
  layout.generator = random_net(kLatent, kAmbient, rng);
  layout.metric = random_net(kAmbient, kEmbed, rng);
  layout.has_generator = layout.has_metric = true;
  layout.input_rows = kLatent;
  layout.input_cols = kBatch;
  const Eigen::MatrixXd real = gaussian(kAmbient, kBatch, rng);

  GradProblem p;
  p.name = "pair_loss";
  p.x0 = layout.pack(gaussian(kLatent, kBatch, rng));
  p.segments = layout.segments("degraded");
  p.value = [=](const Eigen::VectorXd &x) {
    const auto u = layout.unpack(x);
    return pair_loss(u.metric.forward(real), u.metric.forward(u.generator.forward(u.input))).value;
  };
  p.gradient = [=](const Eigen::VectorXd &x) {
    const auto u = layout.unpack(x);
    const ForwardTape gen = u.generator.forward_tape(u.input);
    const ForwardTape emb_real = u.metric.forward_tape(real);
    const ForwardTape emb_fake = u.metric.forward_tape(gen.output());
    const LossValue loss = pair_loss(emb_real.output(), emb_fake.output());
    const Backprop br = u.metric.backward(emb_real, loss.grads[0]);
    const Backprop bf = u.metric.backward(emb_fake, loss.grads[1]);
    const Backprop bg = u.generator.backward(gen, bf.input_grad);
    return layout.join(bg.param_grad, br.param_grad + bf.param_grad, bg.input_grad);
  };
  p.piece = [](const Eigen::VectorXd &) { return std::vector<int>{}; };
  return p;
}

std::vector<int> sign_pattern(const Eigen::MatrixXd &m) {
  std::vector<int> s(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.size(); ++i) s[static_cast<std::size_t>(i)] = sign_of(m.data()[i]);
  return s;
}

GradProblem img_problem(std::mt19937_64 &rng) {
  Layout layout;
  layout.generator = random_net(kLatent, kAmbient, rng);
  layout.has_generator = true;
  layout.input_rows = kLatent;
  layout.input_cols = kBatch;
  const Eigen::MatrixXd real = gaussian(kAmbient, kBatch, rng);

  GradProblem p;
  p.name = "img_loss";
  p.x0 = layout.pack(gaussian(kLatent, kBatch, rng));
  p.segments = layout.segments("degraded");
  p.value = [=](const Eigen::VectorXd &x) {
    const auto u = layout.unpack(x);
    return img_loss(real, u.generator.forward(u.input)).value;
  };
  p.gradient = [=](const Eigen::VectorXd &x) {
    const auto u = layout.unpack(x);
    const ForwardTape gen = u.generator.forward_tape(u.input);
    const LossValue loss = img_loss(real, gen.output());
    const Backprop bg = u.generator.backward(gen, loss.grads[1]);
    return layout.join(bg.param_grad, {}, bg.input_grad);
  };
  p.piece = [=](const Eigen::VectorXd &x) {
    const auto u = layout.unpack(x);
    return sign_pattern(u.generator.forward(u.input) - real);
  };
  return p;
}

GradProblem gen_total_problem(std::mt19937_64 &rng) {
  Layout layout;
  layout.generator = random_net(kLatent, kAmbient, rng);
  layout.has_generator = true;
  layout.input_rows = kLatent;
  layout.input_cols = kBatch;
  const DenseNetwork metric = random_net(kAmbient, kEmbed, rng);
  const Eigen::MatrixXd real = gaussian(kAmbient, kBatch, rng);
  const double lambda = 1.0;
  const double lambda2 = 0.5;
  const double lambda3 = 0.25;

  auto evaluate = [=](const Layout::Unpacked &u, const ForwardTape &gen) {
    const Eigen::MatrixXd &fake = gen.output();
    const Eigen::MatrixXd emb_real = metric.forward(real);
    const ForwardTape emb_fake = metric.forward_tape(fake);
    const LossValue img = img_loss(real, fake);
    const LossValue pair = pair_loss(emb_real, emb_fake.output());
    const LossValue mm = mm_loss(emb_real, emb_fake.output(), lambda);
    (void)u;
    return gen_total_loss(LossValue{img.value, {img.grads[1]}},
                          LossValue{pair.value, {metric.backward(emb_fake, pair.grads[1]).input_grad}},
                          LossValue{mm.value, {metric.backward(emb_fake, mm.grads[1]).input_grad}},
                          lambda2, lambda3);
  };

  GradProblem p;
  p.name = "gen_total_loss";
  p.x0 = layout.pack(gaussian(kLatent, kBatch, rng));
  p.segments = layout.segments("degraded");
  p.value = [=](const Eigen::VectorXd &x) {
    const auto u = layout.unpack(x);
    return evaluate(u, u.generator.forward_tape(u.input)).value;
  };
  p.gradient = [=](const Eigen::VectorXd &x) {
    const auto u = layout.unpack(x);
    const ForwardTape gen = u.generator.forward_tape(u.input);
    const LossValue total = evaluate(u, gen);
    const Backprop bg = u.generator.backward(gen, total.grads[0]);
    return layout.join(bg.param_grad, {}, bg.input_grad);
  };
  p.piece = [=](const Eigen::VectorXd &x) {
    const auto u = layout.unpack(x);
    const Eigen::MatrixXd fake = u.generator.forward(u.input);
    auto s = sign_pattern(fake - real);
    s.push_back(sign_of(p_diameter(metric.forward(real), 2.0) - p_diameter(metric.forward(fake), 2.0)));
    return s;
  };
  return p;
}

std::string variable_name(const GradProblem &problem, Eigen::Index index) {
  Eigen::Index offset = 0;
  for (const auto &[label, length] : problem.segments) {
    if (index < offset + length) {
      return label + "[" + std::to_string(index - offset) + "]";
    }
    offset += length;
  }
  return "?";
}

} // namespace

double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-5});
  return std::abs(analytic - numeric) / scale;
}

void check_problem(const GradProblem &problem, const GradcheckOptions &options,
                   GradcheckReport &report) {
  const Eigen::Index n = problem.x0.size();
  Eigen::VectorXd analytic = problem.gradient(problem.x0);
  require(analytic.size() == n, problem.name + ": gradient length mismatch");
  if (options.inject_fault) {
    analytic[0] += 1e-2 * (1.0 + std::abs(analytic[0]));
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(options.seed ^ std::hash<std::string>{}(problem.name));
  std::shuffle(order.begin(), order.end(), rng);
  const auto take = static_cast<std::size_t>(std::min(n, options.partials_per_loss));
  order.resize(take);
  std::sort(order.begin(), order.end());
  if (options.inject_fault && order.front() != 0) {
    order.front() = 0;
  }

  const auto base_piece = problem.piece(problem.x0);
  for (Eigen::Index i : order) {
    Eigen::VectorXd plus = problem.x0;
    Eigen::VectorXd minus = problem.x0;
    plus[i] += options.step;
    minus[i] -= options.step;
    if (problem.piece(plus) != base_piece || problem.piece(minus) != base_piece) {
      ++report.skipped;
      continue;
    }
    const double numeric = (problem.value(plus) - problem.value(minus)) / (2.0 * options.step);
    PartialCheck check{problem.name, variable_name(problem, i), i, analytic[i], numeric,
                       relative_error(analytic[i], numeric)};
    ++report.checked;
    if (report.checked == 1 || check.error > report.worst.error) {
      report.worst = check;
    }
    if (!(check.error < options.tolerance)) {
      ++report.failed;
      report.failures.push_back(check);
    }
  }
}

std::vector<GradProblem> loss_problems(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<GradProblem> problems;
  problems.push_back(mm_problem(rng));
  problems.push_back(triplet_problem(rng, 0.0));
  problems.push_back(triplet_problem(rng, 0.5));
  problems.push_back(pair_problem(rng));
  problems.push_back(img_problem(rng));
  problems.push_back(gen_total_problem(rng));
  return problems;
}

GradcheckReport run_gradcheck(const GradcheckOptions &options) {
  GradcheckReport report;
  for (const auto &problem : loss_problems(options.seed)) {
    check_problem(problem, options, report);
  }
  return report;
}

std::string GradcheckReport::summary() const {
  return fmt::format("checked {} partials, {} failed, {} skipped at kinks; worst: {} {} "
                     "analytic={:.10g} numeric={:.10g} rel_err={:.3e}",
                     checked, failed, skipped, worst.loss, worst.variable, worst.analytic,
                     worst.numeric, worst.error);
}

} // namespace mvm
