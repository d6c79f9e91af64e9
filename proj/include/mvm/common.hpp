#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace mvm {

/// A batch of points stored column-wise: rows = ambient dimension, cols = k.
/// Every SampleSet carries the uniform empirical measure over its columns.
using SampleSet = Eigen::MatrixXd;
using Point = Eigen::VectorXd;

/// Malformed arguments: dimension mismatches, empty sets, bad parameters.
class InputError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A loss or gradient became NaN/inf.
class NonFiniteError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string &message) {
  if (!condition) {
    throw InputError(message);
  }
}

} // namespace mvm
