#pragma once

#include "mvm/trainer.hpp"

#include <string>

namespace mvm {

/// Flat `key = value` text, `#` starts a comment. `mode` is required; every other key
/// falls back to the TrainConfig default. Unknown or repeated keys are errors.
/// Errors are InputError with a "line N:" prefix where a line is at fault.
TrainConfig parse_config(const std::string &text);
TrainConfig load_config(const std::string &path);

/// Canonical rendering of every key in a fixed order; parse_config(serialize_config(c))
/// reproduces c.
std::string serialize_config(const TrainConfig &config);

} // namespace mvm
