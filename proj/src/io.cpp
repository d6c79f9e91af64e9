#include "mvm/io.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace mvm {

namespace {

std::string trim(const std::string &s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_real(const std::string &text, const std::string &where) {
  const std::string t = trim(text);
  double value = 0.0;
  const auto *end = t.data() + t.size();
  const auto [ptr, ec] = std::from_chars(t.data(), end, value);
  if (t.empty() || ec != std::errc() || ptr != end) {
    throw InputError(where + "not a number: '" + t + "'");
  }
  return value;
}

std::ofstream open_out(const std::string &path) {
  std::ofstream out(path);
  if (!out) {
    throw InputError("cannot write '" + path + "'");
  }
  return out;
}

std::ifstream open_in(const std::string &path) {
  std::ifstream in(path);
  if (!in) {
    throw InputError("cannot read '" + path + "'");
  }
  return in;
}

// "key=value" header line of a checkpoint.
std::string expect_field(std::istream &in, const std::string &key) {
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || trim(line.substr(0, eq)) != key) {
      throw InputError("checkpoint: expected '" + key + "=', got '" + line + "'");
    }
    return trim(line.substr(eq + 1));
  }
  throw InputError("checkpoint: missing '" + key + "'");
}

} // namespace

std::string format_real(double value) {
  if (std::isnan(value)) return "";
  return fmt::format("{}", value);
}

void write_samples_csv(std::ostream &out, const SampleSet &samples) {
  for (Eigen::Index j = 0; j < samples.cols(); ++j) {
    for (Eigen::Index i = 0; i < samples.rows(); ++i) {
      if (i > 0) out << ',';
      out << format_real(samples(i, j));
    }
    out << '\n';
  }
}

void write_samples_csv(const std::string &path, const SampleSet &samples) {
  auto out = open_out(path);
  write_samples_csv(out, samples);
}

SampleSet read_samples_csv(std::istream &in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    std::vector<double> row;
    std::stringstream ss(t);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      row.push_back(parse_real(cell, where));
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw InputError(where + "ragged row: expected " + std::to_string(rows.front().size()) +
                       " columns, got " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  require(!rows.empty(), "sample file contains no points");
  const auto dim = static_cast<Eigen::Index>(rows.front().size());
  SampleSet samples(dim, static_cast<Eigen::Index>(rows.size()));
  for (std::size_t j = 0; j < rows.size(); ++j) {
    for (Eigen::Index i = 0; i < dim; ++i) {
      samples(i, static_cast<Eigen::Index>(j)) = rows[j][static_cast<std::size_t>(i)];
    }
  }
  return samples;
}

SampleSet read_samples_csv(const std::string &path) {
  auto in = open_in(path);
  return read_samples_csv(in);
}

void write_trace_csv(std::ostream &out, const std::vector<TraceRecord> &trace) {
  out << kTraceHeader << '\n';
  for (const auto &r : trace) {
    out << r.epoch << ',' << format_real(r.d_c) << ',' << format_real(r.d_g) << ','
        << format_real(r.d_p) << ',' << format_real(r.d_H) << ',' << format_real(r.loss_mm) << ','
        << format_real(r.loss_apn) << ',' << format_real(r.loss_gen) << '\n';
  }
}

void write_spectrum_csv(std::ostream &out, const std::vector<TraceRecord> &trace) {
  out << "epoch";
  for (int i = 1; i <= 10; ++i) out << ",ev" << i;
  out << '\n';
  for (const auto &r : trace) {
    if (!r.spectrum) continue;
    out << r.epoch;
    for (std::size_t i = 0; i < 10; ++i) {
      out << ',';
      if (i < r.spectrum->top.size()) out << format_real(r.spectrum->top[i]);
    }
    out << '\n';
  }
}

void write_values_csv(std::ostream &out, const std::vector<double> &values) {
  out << "value\n";
  for (double v : values) out << format_real(v) << '\n';
}

void save_checkpoint(std::ostream &out, const DenseNetwork &network, std::uint64_t seed) {
  out << "# mvm checkpoint v1\n";
  out << "seed=" << seed << '\n';
  out << "input_dim=" << network.input_dim() << '\n';
  out << "layers=" << network.layers().size() << '\n';
  for (const auto &layer : network.layers()) {
    out << "layer=" << layer.weight.rows() << ',' << to_string(layer.activation) << ','
        << format_real(layer.slope) << '\n';
  }
  const Eigen::VectorXd params = network.parameters();
  out << "params=" << params.size() << '\n';
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    out << format_real(params[i]) << '\n';
  }
}

void save_checkpoint(const std::string &path, const DenseNetwork &network, std::uint64_t seed) {
  auto out = open_out(path);
  save_checkpoint(out, network, seed);
}

Checkpoint load_checkpoint(std::istream &in) {
  Checkpoint ckpt;
  try {
    ckpt.seed = std::stoull(expect_field(in, "seed"));
    NetworkSpec spec;
    spec.input_dim = std::stol(expect_field(in, "input_dim"));
    const long layers = std::stol(expect_field(in, "layers"));
    require(layers >= 1, "checkpoint: no layers");
    for (long i = 0; i < layers; ++i) {
      std::stringstream ss(expect_field(in, "layer"));
      std::string width, activation, slope;
      std::getline(ss, width, ',');
      std::getline(ss, activation, ',');
      std::getline(ss, slope, ',');
      spec.layers.push_back(
          {std::stol(width), parse_activation(trim(activation)), parse_real(slope, "checkpoint: ")});
    }
    const long count = std::stol(expect_field(in, "params"));
    // Start from any valid network of this shape, then overwrite every parameter.
    ckpt.network = init_network(spec, 0);
    require(count == ckpt.network.parameter_count(), "checkpoint: parameter count mismatch");
    Eigen::VectorXd params(count);
    std::string line;
    for (long i = 0; i < count; ++i) {
      do {
        if (!std::getline(in, line)) throw InputError("checkpoint: truncated parameter list");
        line = trim(line);
      } while (line.empty());
      params[i] = parse_real(line, "checkpoint: ");
    }
    ckpt.network.set_parameters(params);
  } catch (const std::logic_error &err) {
    if (dynamic_cast<const InputError *>(&err)) throw;
    throw InputError(std::string("checkpoint: malformed header (") + err.what() + ")");
  }
  return ckpt;
}

Checkpoint load_checkpoint(const std::string &path) {
  auto in = open_in(path);
  return load_checkpoint(in);
}

} // namespace mvm
