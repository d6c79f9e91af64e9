#include "mvm/config.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace mvm {

namespace {

std::string trim(const std::string &s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double to_double(const std::string &text) {
  double value = 0.0;
  const auto *end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw InputError("expected a number, got '" + text + "'");
  }
  return value;
}

template <typename Int> Int to_int(const std::string &text) {
  Int value = 0;
  const auto *end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw InputError("expected an integer, got '" + text + "'");
  }
  return value;
}

bool to_bool(const std::string &text) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw InputError("expected true or false, got '" + text + "'");
}

std::vector<Eigen::Index> to_widths(const std::string &text) {
  std::vector<Eigen::Index> widths;
  if (text.empty() || text == "none") return widths;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    widths.push_back(to_int<Eigen::Index>(trim(item)));
  }
  return widths;
}

std::string from_widths(const std::vector<Eigen::Index> &widths) {
  if (widths.empty()) return "none";
  return fmt::format("{}", fmt::join(widths, ","));
}

std::string from_double(double v) { return fmt::format("{}", v); }

struct Key {
  const char *name;
  std::function<void(TrainConfig &, const std::string &)> set;
  std::function<std::string(const TrainConfig &)> get;
};

#define MVM_DOUBLE(key, field)                                                                     \
  Key { key, [](TrainConfig &c, const std::string &v) { c.field = to_double(v); },                 \
        [](const TrainConfig &c) { return from_double(c.field); } }
#define MVM_INT(key, field)                                                                        \
  Key {                                                                                            \
    key, [](TrainConfig &c, const std::string &v) { c.field = to_int<decltype(c.field)>(v); },     \
        [](const TrainConfig &c) { return std::to_string(c.field); }                               \
  }

const std::vector<Key> &keys() {
  static const std::vector<Key> table = {
      Key{"mode", [](TrainConfig &c, const std::string &v) { c.mode = parse_train_mode(v); },
          [](const TrainConfig &c) { return to_string(c.mode); }},
      Key{"match_mode",
          [](TrainConfig &c, const std::string &v) { c.match_mode = parse_match_mode(v); },
          [](const TrainConfig &c) { return to_string(c.match_mode); }},
      MVM_INT("latent_dim", latent_dim),
      MVM_INT("ambient_dim", manifold.ambient_dim),
      MVM_INT("embed_dim", embed_dim),
      MVM_INT("batch_size", batch_size),
      MVM_INT("triplet_count", triplet_count),
      MVM_DOUBLE("lambda", lambda),
      MVM_DOUBLE("alpha", alpha),
      MVM_DOUBLE("gamma", gamma),
      MVM_DOUBLE("lambda2", lambda2),
      MVM_DOUBLE("lambda3", lambda3),
      MVM_DOUBLE("gen_lr", generator_optimizer.learning_rate),
      MVM_DOUBLE("gen_beta1", generator_optimizer.beta1),
      MVM_DOUBLE("gen_beta2", generator_optimizer.beta2),
      MVM_DOUBLE("metric_lr", metric_optimizer.learning_rate),
      MVM_DOUBLE("metric_beta1", metric_optimizer.beta1),
      MVM_DOUBLE("metric_beta2", metric_optimizer.beta2),
      MVM_INT("epochs", epochs),
      MVM_INT("steps_per_epoch", steps_per_epoch),
      MVM_INT("diagnostics_interval", diagnostics_interval),
      MVM_INT("probe_size", probe_size),
      Key{"generator_hidden",
          [](TrainConfig &c, const std::string &v) { c.generator_hidden = to_widths(v); },
          [](const TrainConfig &c) { return from_widths(c.generator_hidden); }},
      Key{"metric_hidden",
          [](TrainConfig &c, const std::string &v) { c.metric_hidden = to_widths(v); },
          [](const TrainConfig &c) { return from_widths(c.metric_hidden); }},
      MVM_DOUBLE("leaky_slope", leaky_slope),
      Key{"manifold",
          [](TrainConfig &c, const std::string &v) { c.manifold.kind = parse_manifold_kind(v); },
          [](const TrainConfig &c) { return to_string(c.manifold.kind); }},
      MVM_DOUBLE("radius", manifold.radius),
      MVM_DOUBLE("pitch", manifold.pitch),
      MVM_DOUBLE("turns", manifold.turns),
      MVM_DOUBLE("scale", manifold.scale),
      MVM_DOUBLE("noise_sigma", manifold.noise_sigma),
      MVM_INT("degrade_dim", degrade_dim),
      MVM_DOUBLE("degrade_noise", degrade_noise),
      Key{"early_stop", [](TrainConfig &c, const std::string &v) { c.early_stop = to_bool(v); },
          [](const TrainConfig &c) { return std::string(c.early_stop ? "true" : "false"); }},
      MVM_INT("seed", seed),
  };
  return table;
}

#undef MVM_DOUBLE
#undef MVM_INT

} // namespace

TrainConfig parse_config(const std::string &text) {
  TrainConfig config;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (eq == std::string::npos) {
      throw InputError(where + "expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto &table = keys();
    const auto it = std::find_if(table.begin(), table.end(),
                                 [&](const Key &k) { return key == k.name; });
    if (it == table.end()) {
      throw InputError(where + "unknown key '" + key + "'");
    }
    if (!seen.insert(key).second) {
      throw InputError(where + "duplicate key '" + key + "'");
    }
    try {
      it->set(config, value);
    } catch (const InputError &err) {
      throw InputError(where + key + ": " + err.what());
    }
  }
  if (!seen.count("mode")) {
    throw InputError("missing required key 'mode'");
  }
  config.validate();
  return config;
}

TrainConfig load_config(const std::string &path) {
  std::ifstream in(path);
  if (!in) {
    throw InputError("cannot read config file '" + path + "'");
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string serialize_config(const TrainConfig &config) {
  std::string out;
  for (const auto &key : keys()) {
    out += fmt::format("{} = {}\n", key.name, key.get(config));
  }
  return out;
}

} // namespace mvm
