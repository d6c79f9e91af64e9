#pragma once

#include "mvm/common.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace mvm {

/// |analytic - numeric| / max(|analytic|, |numeric|, 1e-5).
double relative_error(double analytic, double numeric);

/// A scalar function of one flat variable vector with its claimed gradient.
struct GradProblem {
  std::string name;
  Eigen::VectorXd x0;
  std::vector<std::pair<std::string, Eigen::Index>> segments; // label, length; in order
  std::function<double(const Eigen::VectorXd &)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd &)> gradient;
  /// Identifies which smooth piece of the loss `x` lies in (hinge on/off, signs of
  /// absolute values). Partials whose +-h stencil changes the piece are skipped.
  std::function<std::vector<int>(const Eigen::VectorXd &)> piece;
};

struct PartialCheck {
  std::string loss;
  std::string variable;
  Eigen::Index index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double error = 0.0;
};

struct GradcheckOptions {
  std::uint64_t seed = 0;
  double step = 1e-5;
  double tolerance = 1e-4;
  Eigen::Index partials_per_loss = 200;
  bool inject_fault = false; // perturbs one analytic partial per loss
};

struct GradcheckReport {
  std::size_t checked = 0;
  std::size_t failed = 0;
  std::size_t skipped = 0; // stencil straddles a kink
  PartialCheck worst;
  std::vector<PartialCheck> failures;

  bool passed() const { return failed == 0 && checked > 0; }
  std::string summary() const;
};

/// Central differences on sampled coordinates of one problem.
void check_problem(const GradProblem &problem, const GradcheckOptions &options,
                   GradcheckReport &report);

/// Every loss (manifold matching, triplet, direction-regularized triplet, pair, image,
/// total generator loss) composed with random two-layer tanh networks.
std::vector<GradProblem> loss_problems(std::uint64_t seed);

GradcheckReport run_gradcheck(const GradcheckOptions &options);

} // namespace mvm
