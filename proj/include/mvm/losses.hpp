#pragma once

#include "mvm/common.hpp"
#include "mvm/metric_measure.hpp"

#include <string>
#include <vector>

namespace mvm {

/// Scalar loss plus its gradient with respect to each contributing network output.
/// The meaning and order of `grads` is fixed per loss function (documented below).
struct LossValue {
  double value = 0.0;
  std::vector<Eigen::MatrixXd> grads;
};

/// Which shape descriptors the manifold-matching loss compares.
enum class MatchMode { centroid_only, diameter_only, both };

std::string to_string(MatchMode mode);
MatchMode parse_match_mode(const std::string &name);

struct Triplet {
  Point anchor;
  Point positive;
  Point negative;
};

/// Manifold matching on embedded sets:
///   ||mean(E_R) - mean(E_F)|| + lambda * |diam2(E_R) - diam2(E_F)|
/// grads = {dL/dE_R, dL/dE_F}. Subgradient zero at either kink.
LossValue mm_loss(const Eigen::MatrixXd &embedded_real, const Eigen::MatrixXd &embedded_fake,
                  double lambda, MatchMode mode = MatchMode::both);

/// Same, embedding S_R and S_F through the metric first. Gradients are with respect to
/// the embedded outputs.
LossValue mm_loss(const SampleSet &real, const SampleSet &fake, const MetricHandle &metric,
                  double lambda, MatchMode mode = MatchMode::both);

/// max{0, ||a-p||^2 - ||a-n||^2 + alpha} on embedded vectors. grads = {da, dp, dn}.
LossValue triplet_loss(const Eigen::VectorXd &anchor, const Eigen::VectorXd &positive,
                       const Eigen::VectorXd &negative, double alpha);
LossValue triplet_loss(const Triplet &triplet, const MetricHandle &metric, double alpha);

/// Triplet hinge with the direction term -gamma * cos(n - a, p - a) inside the max.
/// The cosine is taken as 0 when either difference has norm below 1e-12.
/// grads = {da, dp, dn}.
LossValue apn_loss(const Eigen::VectorXd &anchor, const Eigen::VectorXd &positive,
                   const Eigen::VectorXd &negative, double alpha, double gamma);
LossValue apn_loss(const Triplet &triplet, const MetricHandle &metric, double alpha,
                   double gamma);

/// Sum of apn_loss over the columns of three equally sized embedded batches.
/// grads = {dL/dE_a, dL/dE_p, dL/dE_n}.
LossValue apn_loss_batch(const Eigen::MatrixXd &anchors, const Eigen::MatrixXd &positives,
                         const Eigen::MatrixXd &negatives, double alpha, double gamma);

/// Mean over pairs of ||e_R - e_F||. grads = {dL/dE_R, dL/dE_F}.
LossValue pair_loss(const Eigen::MatrixXd &embedded_real, const Eigen::MatrixXd &embedded_fake);
LossValue pair_loss(const SampleSet &real, const SampleSet &fake, const MetricHandle &metric);

/// Mean absolute per-coordinate error. grads = {dL/dX_R, dL/dX_F}.
LossValue img_loss(const SampleSet &real, const SampleSet &fake);

/// img + lambda2 * pair + lambda3 * mm. Every component must carry gradients over the
/// same generator outputs (same count and shapes).
LossValue gen_total_loss(const LossValue &img, const LossValue &pair, const LossValue &mm,
                         double lambda2, double lambda3);

} // namespace mvm
