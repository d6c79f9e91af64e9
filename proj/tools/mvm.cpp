// mvm: train, descriptors, diagnose, gradcheck.
//
// Exit codes: 0 success, 1 usage, 2 bad input (config, CSV, checkpoint),
// 3 training aborted on a non-finite loss, 4 gradient check failed.

#include "mvm/config.hpp"
#include "mvm/gradcheck.hpp"
#include "mvm/io.hpp"
#include "mvm/metric_measure.hpp"
#include "mvm/trainer.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitInput = 2;
constexpr int kExitAborted = 3;
constexpr int kExitGradcheck = 4;

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("mvm");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char *env = std::getenv("MVM_LOG");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::info);
}

std::string iso_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::json record_json(const mvm::TraceRecord &r) {
  auto num = [](double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
  nlohmann::json j = {{"epoch", r.epoch},         {"d_c", num(r.d_c)},
                      {"d_g", num(r.d_g)},         {"d_p", num(r.d_p)},
                      {"d_H", num(r.d_H)},         {"loss_img", num(r.loss_img)}};
  if (r.spectrum) j["spectrum"] = r.spectrum->top;
  return j;
}

struct RunPaths {
  fs::path out;
  fs::path trace() const { return out / "trace.csv"; }
  fs::path spectrum() const { return out / "spectrum.csv"; }
  fs::path generator() const { return out / "generator.ckpt"; }
  fs::path metric() const { return out / "metric.ckpt"; }
  fs::path config() const { return out / "config.txt"; }
  fs::path manifest() const { return out / "manifest.json"; }
  fs::path snapshots() const { return out / "snapshots"; }
};

void write_run(const RunPaths &paths, const mvm::TrainConfig &config,
               const mvm::TrainResult &result, const std::string &status,
               const std::string &started, double seconds,
               const std::vector<std::string> &snapshot_files) {
  {
    std::ofstream out(paths.trace());
    mvm::write_trace_csv(out, result.trace);
  }
  {
    std::ofstream out(paths.spectrum());
    mvm::write_spectrum_csv(out, result.trace);
  }
  mvm::save_checkpoint(paths.generator().string(), result.generator, config.seed);
  mvm::save_checkpoint(paths.metric().string(), result.metric, config.seed);

  nlohmann::json manifest = {
      {"status", status},
      {"config", mvm::serialize_config(config)},
      {"output_dir", paths.out.string()},
      {"files",
       {{"trace", paths.trace().filename().string()},
        {"spectrum", paths.spectrum().filename().string()},
        {"generator_checkpoint", paths.generator().filename().string()},
        {"metric_checkpoint", paths.metric().filename().string()},
        {"config", paths.config().filename().string()},
        {"snapshots", snapshot_files}}},
      {"epochs_completed", result.trace.size()},
      {"initial", record_json(result.initial)},
      {"final", result.trace.empty() ? nlohmann::json(nullptr) : record_json(result.trace.back())},
      {"started_utc", started},
      {"finished_utc", iso_now()},
      {"wall_seconds", seconds}};
  std::ofstream(paths.manifest()) << manifest.dump(2) << '\n';
}

int cmd_train(const std::string &config_path, const std::string &out_dir) {
  const mvm::TrainConfig config = mvm::load_config(config_path);
  RunPaths paths{out_dir};
  fs::create_directories(paths.snapshots());
  std::ofstream(paths.config()) << mvm::serialize_config(config);

  const std::string started = iso_now();
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  std::vector<std::string> snapshot_files;
  auto observer = [&](const mvm::EpochView &view) {
    const auto &r = view.record;
    spdlog::debug("epoch {} d_c={:.4g} d_g={:.4g} d_H={:.4g} loss_mm={:.4g} loss_apn={:.4g}",
                  r.epoch, r.d_c, r.d_g, r.d_H, r.loss_mm, r.loss_apn);
    const bool due = config.diagnostics_interval > 0 && r.epoch % config.diagnostics_interval == 0;
    if (due || r.epoch == config.epochs) {
      const std::string name = fmt::format("fake_epoch_{:05d}.csv", r.epoch);
      mvm::write_samples_csv((paths.snapshots() / name).string(), view.probe_fake);
      snapshot_files.push_back("snapshots/" + name);
      spdlog::info("epoch {}/{}: d_c={:.4g} d_H={:.4g}", r.epoch, config.epochs, r.d_c, r.d_H);
    }
  };

  spdlog::info("training ({}) for {} epochs into {}", mvm::to_string(config.mode), config.epochs,
               out_dir);
  try {
    const mvm::TrainResult result = mvm::train(config, observer);
    write_run(paths, config, result, "completed", started, elapsed(), snapshot_files);
  } catch (const mvm::TrainingAborted &err) {
    spdlog::error("training aborted: {}", err.what());
    write_run(paths, config, err.last_valid(), std::string("aborted: ") + err.what(), started,
              elapsed(), snapshot_files);
    return kExitAborted;
  }
  spdlog::info("wrote {}", paths.trace().string());
  return 0;
}

struct LoadedMetric {
  std::optional<mvm::DenseNetwork> network;
  mvm::MetricHandle handle() const {
    return network ? mvm::MetricHandle::pullback(*network) : mvm::MetricHandle::euclidean();
  }
};

LoadedMetric load_metric(const std::string &spec, Eigen::Index dim) {
  LoadedMetric metric;
  if (spec == "euclidean") return metric;
  metric.network = mvm::load_checkpoint(spec).network;
  if (metric.network->input_dim() != dim) {
    throw mvm::InputError("checkpoint '" + spec + "' expects dimension " +
                          std::to_string(metric.network->input_dim()) + ", samples have " +
                          std::to_string(dim));
  }
  return metric;
}

std::vector<double> parse_p_list(const std::string &text) {
  std::vector<double> ps;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      ps.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error &) {
      throw mvm::InputError("bad p value '" + item + "'");
    }
  }
  return ps;
}

int cmd_descriptors(const std::string &input, const std::string &input2,
                    const std::string &metric_spec, const std::string &p_list) {
  const mvm::SampleSet samples = mvm::read_samples_csv(input);
  const LoadedMetric metric = load_metric(metric_spec, samples.rows());
  const auto handle = metric.handle();
  std::cout << "points=" << samples.cols() << '\n';
  std::cout << "dim=" << samples.rows() << '\n';
  std::cout << "frechet_mean_index=" << mvm::frechet_mean_discrete(samples, handle) << '\n';
  for (double p : parse_p_list(p_list)) {
    std::cout << "diam_" << mvm::format_real(p) << '='
              << mvm::format_real(mvm::p_diameter(samples, handle, p)) << '\n';
  }
  if (!input2.empty()) {
    const mvm::SampleSet other = mvm::read_samples_csv(input2);
    if (other.rows() != samples.rows()) {
      throw mvm::InputError("second input has dimension " + std::to_string(other.rows()) +
                            ", first has " + std::to_string(samples.rows()));
    }
    std::cout << "centroid_distance="
              << mvm::format_real(mvm::centroid_distance(samples, other, handle)) << '\n';
    std::cout << "hausdorff=" << mvm::format_real(mvm::hausdorff_distance(samples, other, handle))
              << '\n';
  }
  return 0;
}

int cmd_diagnose(const std::string &input, const std::string &metric_spec, int count,
                 const std::string &out_path, const std::string &pca_path) {
  const mvm::SampleSet samples = mvm::read_samples_csv(input);
  const LoadedMetric metric = load_metric(metric_spec, samples.rows());
  const auto handle = metric.handle();
  const auto dm = mvm::distance_matrix(samples, handle, true);
  const auto keep = std::min<Eigen::Index>(count, dm.entries.rows());
  const auto values = mvm::top_eigenvalues(dm, keep);
  if (out_path.empty()) {
    mvm::write_values_csv(std::cout, values);
  } else {
    std::ofstream out(out_path);
    mvm::write_values_csv(out, values);
  }
  if (!pca_path.empty()) {
    mvm::write_samples_csv(pca_path, mvm::pca_project_2d(handle.embed(samples)));
  }
  return 0;
}

int cmd_gradcheck(std::uint64_t seed, bool inject_fault) {
  mvm::GradcheckOptions options;
  options.seed = seed;
  options.inject_fault = inject_fault;
  const auto report = mvm::run_gradcheck(options);
  std::cout << report.summary() << '\n';
  for (const auto &f : report.failures) {
    std::cout << "FAIL " << f.loss << ' ' << f.variable << " analytic=" << mvm::format_real(f.analytic)
              << " numeric=" << mvm::format_real(f.numeric) << '\n';
  }
  return report.passed() ? 0 : kExitGradcheck;
}

} // namespace

int main(int argc, char **argv) {
  configure_logging();
  CLI::App app{"Manifold matching with learned metrics"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  auto *train = app.add_subcommand("train", "Run a configured training experiment");
  train->add_option("--config", config_path, "key = value config file")->required();
  train->add_option("--out", out_dir, "Output directory")->required();

  std::string input, input2, metric_spec = "euclidean", p_list = "2";
  auto *descriptors = app.add_subcommand("descriptors", "Frechet mean, p-diameters, set distances");
  descriptors->add_option("--input", input, "Sample CSV")->required();
  descriptors->add_option("--input2", input2, "Second sample CSV");
  descriptors->add_option("--metric", metric_spec, "euclidean or a checkpoint path");
  descriptors->add_option("--p", p_list, "Comma-separated p values");

  int count = 10;
  std::string eig_out, pca_out;
  auto *diagnose = app.add_subcommand("diagnose", "Top eigenvalues of the normalized distance matrix");
  diagnose->add_option("--input", input, "Sample CSV")->required();
  diagnose->add_option("--metric", metric_spec, "euclidean or a checkpoint path");
  diagnose->add_option("--count", count, "Number of eigenvalues")->check(CLI::PositiveNumber);
  diagnose->add_option("--out", eig_out, "Write eigenvalues here instead of stdout");
  diagnose->add_option("--pca", pca_out, "Write a 2-d PCA projection of the embedded points");

  std::uint64_t seed = 0;
  bool inject_fault = false;
  auto *gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every loss");
  gradcheck->add_option("--seed", seed, "Seed for the random networks");
  gradcheck->add_flag("--inject-fault", inject_fault, "Corrupt one analytic partial per loss")
      ->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*train) return cmd_train(config_path, out_dir);
    if (*descriptors) return cmd_descriptors(input, input2, metric_spec, p_list);
    if (*diagnose) return cmd_diagnose(input, metric_spec, count, eig_out, pca_out);
    if (*gradcheck) return cmd_gradcheck(seed, inject_fault);
  } catch (const mvm::InputError &e) {
    spdlog::error("{}", e.what());
    return kExitInput;
  } catch (const std::exception &e) {
    spdlog::error("{}", e.what());
    return kExitInput;
  }
  return kExitUsage;
}
