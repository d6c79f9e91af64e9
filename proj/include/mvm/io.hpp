#pragma once

#include "mvm/tinynet.hpp"
#include "mvm/trainer.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace mvm {

/// Shortest text that parses back to the same double; NaN renders as an empty field.
std::string format_real(double value);

// SampleSet CSV: one row per point, one column per coordinate, no header.
// Blank lines and lines starting with '#' are skipped on read.
void write_samples_csv(std::ostream &out, const SampleSet &samples);
void write_samples_csv(const std::string &path, const SampleSet &samples);
SampleSet read_samples_csv(std::istream &in);
SampleSet read_samples_csv(const std::string &path);

inline constexpr const char *kTraceHeader = "epoch,d_c,d_g,d_p,d_H,loss_mm,loss_apn,loss_gen";

/// One row per record under kTraceHeader.
void write_trace_csv(std::ostream &out, const std::vector<TraceRecord> &trace);
/// Header epoch,ev1..ev10; only records carrying a spectrum produce a row.
void write_spectrum_csv(std::ostream &out, const std::vector<TraceRecord> &trace);

/// Header `value`, one eigenvalue per row.
void write_values_csv(std::ostream &out, const std::vector<double> &values);

struct Checkpoint {
  DenseNetwork network;
  std::uint64_t seed = 0;
};

// Text checkpoint: header lines recording the layer spec and seed, then one parameter
// per line in canonical order.
void save_checkpoint(std::ostream &out, const DenseNetwork &network, std::uint64_t seed);
void save_checkpoint(const std::string &path, const DenseNetwork &network, std::uint64_t seed);
Checkpoint load_checkpoint(std::istream &in);
Checkpoint load_checkpoint(const std::string &path);

} // namespace mvm
