// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "mvm/config.hpp"
#include "mvm/gradcheck.hpp"
#include "mvm/io.hpp"
#include "mvm/losses.hpp"
#include "mvm/metric_measure.hpp"
#include "mvm/synthdata.hpp"
#include "mvm/trainer.hpp"
#include "oracles.hpp"

#include <fmt/core.h>

#include <chrono>
#include <cstring>
#include <functional>
#include <sstream>

using namespace mvm;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

int failures = 0;

void criterion(int id, const std::string &name, double limit_seconds,
               const std::function<Outcome()> &body) {
  const auto t0 = Clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception &err) {
    out = {false, std::string("exception: ") + err.what()};
  }
  const double seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  if (limit_seconds > 0 && seconds >= limit_seconds) {
    out.pass = false;
    out.detail += fmt::format("; runtime {:.1f} s exceeds {:.0f} s", seconds, limit_seconds);
  }
  if (!out.pass) ++failures;
  fmt::print("[{}] {:2d} {}: {} ({:.2f} s)\n", out.pass ? "PASS" : "FAIL", id, name, out.detail,
             seconds);
  std::fflush(stdout);
}

bool bitwise(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

bool bitwise(const LossValue &a, const LossValue &b) {
  if (!bitwise(a.value, b.value) || a.grads.size() != b.grads.size()) return false;
  for (std::size_t i = 0; i < a.grads.size(); ++i) {
    if (a.grads[i].rows() != b.grads[i].rows() || a.grads[i].cols() != b.grads[i].cols() ||
        std::memcmp(a.grads[i].data(), b.grads[i].data(),
                    sizeof(double) * static_cast<std::size_t>(a.grads[i].size())) != 0)
      return false;
  }
  return true;
}

std::string trace_csv(const std::vector<TraceRecord> &trace) {
  std::ostringstream out;
  write_trace_csv(out, trace);
  return out.str();
}

TrainConfig config_file(const char *name) {
  return load_config(std::string(MVM_CONFIG_DIR) + "/" + name);
}

Outcome pseudometric() {
  std::mt19937_64 rng(101);
  const auto net = init_network(mlp_spec(3, {32, 32}, 4), 7);
  const auto tanh_net = init_network(mlp_spec(3, {16}, 2, Activation::tanh), 8);
  double worst_triangle = 0.0;
  int asym = 0, nonzero = 0;
  for (const auto &metric :
       {MetricHandle::euclidean(), MetricHandle::pullback(net), MetricHandle::pullback(tanh_net)}) {
    for (int t = 0; t < 1000; ++t) {
      const Eigen::MatrixXd xyz = oracle::gaussian(3, 3, rng, 2.0);
      const Point x = xyz.col(0), y = xyz.col(1), z = xyz.col(2);
      if (distance(metric, x, x) != 0.0) ++nonzero;
      if (distance(metric, x, y) != distance(metric, y, x)) ++asym;
      worst_triangle = std::max(worst_triangle, distance(metric, x, z) - distance(metric, x, y) -
                                                    distance(metric, y, z));
    }
  }
  return {asym == 0 && nonzero == 0 && worst_triangle <= 1e-9,
          fmt::format("3x1000 triples, asymmetric={}, d(x,x)!=0: {}, worst triangle excess {:.2e}",
                      asym, nonzero, std::max(0.0, worst_triangle))};
}

Outcome p_diameter_laws() {
  std::mt19937_64 rng(202);
  double worst_drop = 0.0, worst_low = 1.0, worst_high = 0.0;
  for (int t = 0; t < 100; ++t) {
    const SampleSet s = oracle::gaussian(3, 50, rng, 1.0 + t);
    double prev = 0.0;
    for (double p : {1.0, 2.0, 4.0, 8.0}) {
      const double d = p_diameter(s, MetricHandle::euclidean(), p);
      worst_drop = std::max(worst_drop, prev - d);
      prev = d;
    }
    const double dmax = oracle::max_pairwise(oracle::to_points(s));
    const double ratio = p_diameter(s, MetricHandle::euclidean(), 256.0) / dmax;
    worst_low = std::min(worst_low, ratio);
    worst_high = std::max(worst_high, ratio);
  }
  const double bound = std::pow(50.0, -2.0 / 256.0);
  return {worst_drop <= 1e-9 && worst_low >= bound && worst_high <= 1.0,
          fmt::format("max monotonicity violation {:.2e}; diam_256/d_max in [{:.6f}, {:.6f}], "
                      "required [{:.6f}, 1]",
                      std::max(0.0, worst_drop), worst_low, worst_high, bound)};
}

Outcome closed_form_diameter() {
  ManifoldSpec spec;
  spec.seed = 303;
  const double d2 = p_diameter(sample_manifold(spec, 10000), MetricHandle::euclidean(), 2.0);
  const double rel = std::abs(d2 - std::sqrt(2.0)) / std::sqrt(2.0);
  SampleSet two(2, 2);
  two << 0.0, 1.2, 0.0, -0.5; // distance 1.3
  const double pair_err = std::abs(p_diameter(two, MetricHandle::euclidean(), 2.0) - 1.3 / std::sqrt(2.0));
  return {rel < 0.02 && pair_err < 1e-12,
          fmt::format("circle diam_2={:.5f} (rel err {:.2e} < 2e-2); two-point err {:.1e}", d2, rel,
                      pair_err)};
}

Outcome frechet_grid() {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double h = 0.01;
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    SampleSet s(2, 10);
    for (Eigen::Index j = 0; j < s.cols(); ++j) s.col(j) << u(rng), u(rng);
    double best = std::numeric_limits<double>::infinity();
    Point arg(2);
    for (int i = 0; i <= 100; ++i) {
      for (int j = 0; j <= 100; ++j) {
        const Point c{{i * h, j * h}};
        const double cost = frechet_cost(s, MetricHandle::euclidean(), c);
        if (cost < best) {
          best = cost;
          arg = c;
        }
      }
    }
    worst = std::max(worst, (arg - Point(s.rowwise().mean())).cwiseAbs().maxCoeff());
  }
  return {worst <= h, fmt::format("20 sets, worst grid-minimizer offset {:.4f} <= {}", worst, h)};
}

Outcome gradients() {
  const auto report = run_gradcheck(GradcheckOptions{});
  return {report.passed() && report.checked >= 500, report.summary()};
}

Outcome reductions() {
  std::mt19937_64 rng(606);
  const auto net = init_network(mlp_spec(3, {16}, 4), 3);
  const auto metric = MetricHandle::pullback(net);
  int bad_apn = 0, bad_mm = 0, bad_gen = 0, bad_self = 0;
  for (int t = 0; t < 100; ++t) {
    const Eigen::MatrixXd x = oracle::gaussian(4, 3, rng);
    if (!bitwise(apn_loss(x.col(0), x.col(1), x.col(2), 1.0, 0.0),
                 triplet_loss(x.col(0), x.col(1), x.col(2), 1.0)))
      ++bad_apn;
    const SampleSet r = oracle::gaussian(3, 2 + t % 20, rng), f = oracle::gaussian(3, 2 + t % 20, rng);
    if (!bitwise(mm_loss(r, f, metric, 0.0).value, centroid_distance(r, f, metric))) ++bad_mm;
    const auto img = img_loss(r, f);
    if (!bitwise(gen_total_loss(img, pair_loss(r, f), mm_loss(r, f, 1.0), 0.0, 0.0), img)) ++bad_gen;
    if (mm_loss(r, r, metric, 1.0).value != 0.0) ++bad_self;
  }
  return {bad_apn + bad_mm + bad_gen + bad_self == 0,
          fmt::format("mismatches over 100 cases: apn/triplet {}, mm/centroid {}, gen/img {}, "
                      "mm(S,S)!=0 {}",
                      bad_apn, bad_mm, bad_gen, bad_self)};
}

Outcome oracles() {
  std::mt19937_64 rng(707);
  double h_err = 0.0, p_err = 0.0, e_err = 0.0;
  int f_bad = 0;
  for (int t = 0; t < 50; ++t) {
    const SampleSet a = oracle::gaussian(3, 1 + t % 12, rng), b = oracle::gaussian(3, 12 - t % 12, rng);
    const auto pa = oracle::to_points(a), pb = oracle::to_points(b);
    h_err = std::max(h_err, std::abs(hausdorff_distance(a, b, MetricHandle::euclidean()) -
                                     oracle::hausdorff(pa, pb)));
    if (static_cast<std::size_t>(frechet_mean_discrete(b, MetricHandle::euclidean())) !=
        oracle::frechet_index(pb))
      ++f_bad;
    for (double p : {1.0, 2.0, 3.0, 8.0}) {
      p_err = std::max(p_err, std::abs(p_diameter(b, MetricHandle::euclidean(), p) -
                                       oracle::p_diameter(pb, p)));
    }
    const Eigen::MatrixXd m = oracle::random_symmetric(8, rng);
    const auto got = top_eigenvalues(DistanceMatrix{m, false}, 8);
    const auto expect = oracle::jacobi_eigenvalues(oracle::to_rows(m));
    for (std::size_t i = 0; i < 8; ++i) e_err = std::max(e_err, std::abs(got[i] - expect[i]));
  }
  return {h_err <= 1e-8 && p_err <= 1e-8 && e_err <= 1e-8 && f_bad == 0,
          fmt::format("50 instances: hausdorff err {:.1e}, frechet mismatches {}, p-diameter err "
                      "{:.1e}, eigenvalue err {:.1e}",
                      h_err, f_bad, p_err, e_err)};
}

// Shared between criteria 8, 9 and 11.
std::vector<TraceRecord> circle_trace;

Outcome circle_run() {
  const TrainConfig config = config_file("circle.cfg");
  const auto result = train(config);
  circle_trace = result.trace;
  const auto &init = result.initial;
  const auto &last = result.trace.back();
  const double rc = last.d_c / init.d_c, rh = last.d_H / init.d_H;

  std::mt19937_64 rng(808);
  const SampleSet x = result.generator.forward(sample_prior({config.latent_dim}, 1000, rng));
  int near = 0;
  for (Eigen::Index j = 0; j < x.cols(); ++j) near += std::abs(x.col(j).norm() - 1.0) < 0.15;
  return {rc < 0.1 && rh < 0.5 && near >= 900,
          fmt::format("d_c {:.4f} -> {:.4f} (x{:.3f} < 0.1), d_H {:.4f} -> {:.4f} (x{:.3f} < 0.5), "
                      "{}/1000 points within 0.15 of the circle",
                      init.d_c, last.d_c, rc, init.d_H, last.d_H, rh, near)};
}

// Reruns the circle config with an observer that checks the full spectrum of every epoch.
std::vector<TraceRecord> circle_rerun;

Outcome spectrum_diagnostic() {
  const TrainConfig config = config_file("circle.cfg");
  Trainer trainer(config);
  double worst = 0.0;
  bool complex_or_asym = false;
  int epochs_checked = 0;
  const auto result = trainer.run([&](const EpochView &view) {
    const auto dm = distance_matrix(trainer.probe_real(), MetricHandle::pullback(view.metric), true);
    if ((dm.entries - dm.entries.transpose()).cwiseAbs().maxCoeff() != 0.0) complex_or_asym = true;
    const Eigen::VectorXcd ev = dm.entries.eigenvalues(); // general solver: imaginary parts must vanish
    if (ev.imag().cwiseAbs().maxCoeff() > 1e-8) complex_or_asym = true;
    worst = std::max(worst, std::abs(ev.real().sum() - dm.entries.trace()));
    ++epochs_checked;
  });
  circle_rerun = result.trace;
  int missing = 0, wrong_size = 0;
  double worst_recorded = 0.0;
  for (const auto &r : result.trace) {
    const bool due = r.epoch % config.diagnostics_interval == 0;
    if (due != r.spectrum.has_value()) ++missing;
    if (r.spectrum) {
      if (r.spectrum->top.size() != 10) ++wrong_size;
      worst_recorded = std::max(worst_recorded, std::abs(r.spectrum->eigenvalue_sum - r.spectrum->matrix_trace));
    }
  }
  return {!complex_or_asym && worst <= 1e-8 && worst_recorded <= 1e-8 && missing == 0 &&
              wrong_size == 0 && epochs_checked == config.epochs,
          fmt::format("{} epochs checked, spectra present exactly every {} epochs: {}, real: {}, "
                      "worst |sum(ev) - trace| {:.1e}",
                      epochs_checked, config.diagnostics_interval, missing == 0 && wrong_size == 0,
                      !complex_or_asym, std::max(worst, worst_recorded))};
}

std::vector<TraceRecord> supervised_trace;

Outcome supervised_run() {
  const TrainConfig config = config_file("supervised.cfg");
  const auto result = train(config);
  supervised_trace = result.trace;
  const double ratio = result.trace.back().loss_img / result.initial.loss_img;
  std::vector<double> windows;
  for (std::size_t start = 0; start + 10 <= result.trace.size(); start += 10) {
    double sum = 0.0;
    for (std::size_t i = start; i < start + 10; ++i) sum += result.trace[i].d_p;
    windows.push_back(sum / 10.0);
  }
  bool monotone = windows.size() >= 2;
  for (std::size_t i = 1; i < windows.size(); ++i) monotone = monotone && windows[i] <= windows[i - 1];
  std::string w;
  for (double v : windows) w += fmt::format(" {:.4g}", v);
  return {config.epochs <= 100 && ratio < 0.1 && monotone,
          fmt::format("L_img {:.4g} -> {:.4g} (x{:.4f} < 0.1) in {} epochs; d_p 10-epoch means:{}",
                      result.initial.loss_img, result.trace.back().loss_img, ratio, config.epochs, w)};
}

Outcome determinism() {
  const bool circle_same = !circle_trace.empty() && trace_csv(circle_trace) == trace_csv(circle_rerun);
  const TrainConfig config = config_file("supervised.cfg");
  const bool supervised_same = !supervised_trace.empty() &&
                               trace_csv(train(config).trace) == trace_csv(supervised_trace);
  return {circle_same && supervised_same,
          fmt::format("circle rerun identical: {}, supervised rerun identical: {}", circle_same,
                      supervised_same)};
}

} // namespace

int main() {
  criterion(1, "pseudometric axioms", 5, pseudometric);
  criterion(2, "p-diameter laws", 10, p_diameter_laws);
  criterion(3, "closed-form diameter", 0, closed_form_diameter);
  criterion(4, "Frechet mean equals the mean under d_E", 0, frechet_grid);
  criterion(5, "gradient correctness", 60, gradients);
  criterion(6, "loss reductions", 0, reductions);
  criterion(7, "oracle equivalence", 0, oracles);
  criterion(8, "circle matching run", 180, circle_run);
  criterion(9, "distance-matrix spectrum diagnostic", 0, spectrum_diagnostic);
  criterion(10, "supervised linear degradation", 0, supervised_run);
  criterion(11, "determinism", 0, determinism);
  fmt::print("{} of 11 criteria passed\n", 11 - failures);
  return failures == 0 ? 0 : 1;
}
