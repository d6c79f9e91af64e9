#include "mvm/losses.hpp"

#include <cmath>

namespace mvm {

namespace {

constexpr double kDegenerateNorm = 1e-12;

// d diam2 / d e_i = 2 (e_i - mean) / (k * diam2)
Eigen::MatrixXd diameter_gradient(const Eigen::MatrixXd &embedded, double diameter) {
  if (diameter == 0.0) {
    return Eigen::MatrixXd::Zero(embedded.rows(), embedded.cols());
  }
  const double k = static_cast<double>(embedded.cols());
  const Eigen::VectorXd mean = column_mean(embedded);
  return (embedded.colwise() - mean) * (2.0 / (k * diameter));
}

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

} // namespace

std::string to_string(MatchMode mode) {
  switch (mode) {
  case MatchMode::centroid_only:
    return "centroid_only";
  case MatchMode::diameter_only:
    return "diameter_only";
  case MatchMode::both:
    return "both";
  }
  return "?";
}

MatchMode parse_match_mode(const std::string &name) {
  if (name == "centroid_only") return MatchMode::centroid_only;
  if (name == "diameter_only") return MatchMode::diameter_only;
  if (name == "both") return MatchMode::both;
  throw InputError("unknown match_mode '" + name + "'");
}

LossValue mm_loss(const Eigen::MatrixXd &embedded_real, const Eigen::MatrixXd &embedded_fake,
                  double lambda, MatchMode mode) {
  require(embedded_real.cols() >= 1 && embedded_fake.cols() >= 1, "mm_loss: empty sample set");
  require(embedded_real.rows() == embedded_fake.rows(), "mm_loss: dimension mismatch");
  require(lambda >= 0.0, "mm_loss: lambda must be >= 0");

  LossValue loss;
  Eigen::MatrixXd grad_real = Eigen::MatrixXd::Zero(embedded_real.rows(), embedded_real.cols());
  Eigen::MatrixXd grad_fake = Eigen::MatrixXd::Zero(embedded_fake.rows(), embedded_fake.cols());

  if (mode != MatchMode::diameter_only) {
    const Eigen::VectorXd gap = column_mean(embedded_real) - column_mean(embedded_fake);
    const double centroid_gap = gap.norm();
    loss.value = centroid_gap;
    if (centroid_gap > 0.0) {
      const Eigen::VectorXd unit = gap / centroid_gap;
      grad_real.colwise() += unit / static_cast<double>(embedded_real.cols());
      grad_fake.colwise() -= unit / static_cast<double>(embedded_fake.cols());
    }
  }

  if (mode != MatchMode::centroid_only) {
    const double diam_real = p_diameter(embedded_real, 2.0);
    const double diam_fake = p_diameter(embedded_fake, 2.0);
    const double gap = diam_real - diam_fake;
    loss.value += lambda * std::abs(gap);
    const double s = lambda * sign(gap);
    if (s != 0.0) {
      grad_real += s * diameter_gradient(embedded_real, diam_real);
      grad_fake -= s * diameter_gradient(embedded_fake, diam_fake);
    }
  }

  loss.grads = {std::move(grad_real), std::move(grad_fake)};
  return loss;
}

LossValue mm_loss(const SampleSet &real, const SampleSet &fake, const MetricHandle &metric,
                  double lambda, MatchMode mode) {
  require(real.rows() == fake.rows(), "mm_loss: dimension mismatch");
  return mm_loss(metric.embed(real), metric.embed(fake), lambda, mode);
}

LossValue apn_loss(const Eigen::VectorXd &anchor, const Eigen::VectorXd &positive,
                   const Eigen::VectorXd &negative, double alpha, double gamma) {
  require(anchor.size() == positive.size() && anchor.size() == negative.size(),
          "triplet: dimension mismatch");
  const Eigen::VectorXd to_pos = positive - anchor;
  const Eigen::VectorXd to_neg = negative - anchor;
  const double d_ap2 = to_pos.squaredNorm();
  const double d_an2 = to_neg.squaredNorm();

  const double norm_pos = to_pos.norm();
  const double norm_neg = to_neg.norm();
  const bool degenerate = norm_pos < kDegenerateNorm || norm_neg < kDegenerateNorm;
  const double cosine = degenerate ? 0.0 : to_neg.dot(to_pos) / (norm_neg * norm_pos);

  const double hinge = d_ap2 - d_an2 + alpha - gamma * cosine;

  LossValue loss;
  const auto n = anchor.size();
  if (!(hinge > 0.0)) {
    loss.grads = {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
    return loss;
  }
  loss.value = hinge;

  // d(d_ap2 - d_an2): da = 2(n - p), dp = 2(p - a), dn = -2(n - a)
  Eigen::VectorXd grad_a = 2.0 * (negative - positive);
  Eigen::VectorXd grad_p = 2.0 * to_pos;
  Eigen::VectorXd grad_n = -2.0 * to_neg;

  if (!degenerate) {
    const double inv = 1.0 / (norm_neg * norm_pos);
    const Eigen::VectorXd dcos_neg = to_pos * inv - to_neg * (cosine / (norm_neg * norm_neg));
    const Eigen::VectorXd dcos_pos = to_neg * inv - to_pos * (cosine / (norm_pos * norm_pos));
    grad_n -= gamma * dcos_neg;
    grad_p -= gamma * dcos_pos;
    grad_a += gamma * (dcos_neg + dcos_pos);
  }
  loss.grads = {std::move(grad_a), std::move(grad_p), std::move(grad_n)};
  return loss;
}

LossValue apn_loss(const Triplet &triplet, const MetricHandle &metric, double alpha,
                   double gamma) {
  require(triplet.anchor.size() == triplet.positive.size() &&
              triplet.anchor.size() == triplet.negative.size(),
          "triplet: dimension mismatch");
  return apn_loss(metric.embed(triplet.anchor), metric.embed(triplet.positive),
                  metric.embed(triplet.negative), alpha, gamma);
}

LossValue triplet_loss(const Eigen::VectorXd &anchor, const Eigen::VectorXd &positive,
                       const Eigen::VectorXd &negative, double alpha) {
  return apn_loss(anchor, positive, negative, alpha, 0.0);
}

LossValue triplet_loss(const Triplet &triplet, const MetricHandle &metric, double alpha) {
  return apn_loss(triplet, metric, alpha, 0.0);
}

LossValue apn_loss_batch(const Eigen::MatrixXd &anchors, const Eigen::MatrixXd &positives,
                         const Eigen::MatrixXd &negatives, double alpha, double gamma) {
  require(anchors.rows() == positives.rows() && anchors.rows() == negatives.rows(),
          "apn_loss_batch: dimension mismatch");
  require(anchors.cols() == positives.cols() && anchors.cols() == negatives.cols(),
          "apn_loss_batch: batch size mismatch");
  LossValue total;
  total.grads = {Eigen::MatrixXd::Zero(anchors.rows(), anchors.cols()),
                 Eigen::MatrixXd::Zero(anchors.rows(), anchors.cols()),
                 Eigen::MatrixXd::Zero(anchors.rows(), anchors.cols())};
  for (Eigen::Index i = 0; i < anchors.cols(); ++i) {
    const LossValue one =
        apn_loss(anchors.col(i), positives.col(i), negatives.col(i), alpha, gamma);
    total.value += one.value;
    for (std::size_t g = 0; g < 3; ++g) {
      total.grads[g].col(i) = one.grads[g];
    }
  }
  return total;
}

LossValue pair_loss(const Eigen::MatrixXd &embedded_real, const Eigen::MatrixXd &embedded_fake) {
  require(embedded_real.rows() == embedded_fake.rows() &&
              embedded_real.cols() == embedded_fake.cols(),
          "pair_loss: batch shape mismatch");
  require(embedded_real.cols() >= 1, "pair_loss: empty batch");
  const double k = static_cast<double>(embedded_real.cols());
  LossValue loss;
  Eigen::MatrixXd grad_real = Eigen::MatrixXd::Zero(embedded_real.rows(), embedded_real.cols());
  for (Eigen::Index i = 0; i < embedded_real.cols(); ++i) {
    const Eigen::VectorXd diff = embedded_real.col(i) - embedded_fake.col(i);
    const double norm = diff.norm();
    loss.value += norm;
    if (norm > 0.0) {
      grad_real.col(i) = diff / (norm * k);
    }
  }
  loss.value /= k;
  Eigen::MatrixXd grad_fake = -grad_real;
  loss.grads = {std::move(grad_real), std::move(grad_fake)};
  return loss;
}

LossValue pair_loss(const SampleSet &real, const SampleSet &fake, const MetricHandle &metric) {
  require(real.rows() == fake.rows() && real.cols() == fake.cols(),
          "pair_loss: batch shape mismatch");
  return pair_loss(metric.embed(real), metric.embed(fake));
}

LossValue img_loss(const SampleSet &real, const SampleSet &fake) {
  require(real.rows() == fake.rows() && real.cols() == fake.cols(),
          "img_loss: batch shape mismatch");
  require(real.size() >= 1, "img_loss: empty batch");
  const double count = static_cast<double>(real.size());
  const Eigen::MatrixXd diff = fake - real;
  LossValue loss;
  loss.value = diff.cwiseAbs().sum() / count;
  Eigen::MatrixXd grad_fake = diff.unaryExpr([count](double x) { return sign(x) / count; });
  Eigen::MatrixXd grad_real = diff.unaryExpr([count](double x) { return sign(-x) / count; });
  loss.grads = {std::move(grad_real), std::move(grad_fake)};
  return loss;
}

LossValue gen_total_loss(const LossValue &img, const LossValue &pair, const LossValue &mm,
                         double lambda2, double lambda3) {
  require(img.grads.size() == pair.grads.size() && img.grads.size() == mm.grads.size(),
          "gen_total_loss: components carry different gradient sets");
  LossValue total;
  total.value = img.value + lambda2 * pair.value + lambda3 * mm.value;
  total.grads.reserve(img.grads.size());
  for (std::size_t i = 0; i < img.grads.size(); ++i) {
    const auto &g = img.grads[i];
    require(pair.grads[i].rows() == g.rows() && pair.grads[i].cols() == g.cols() &&
                mm.grads[i].rows() == g.rows() && mm.grads[i].cols() == g.cols(),
            "gen_total_loss: gradient shape mismatch");
    total.grads.push_back(g + lambda2 * pair.grads[i] + lambda3 * mm.grads[i]);
  }
  return total;
}

} // namespace mvm
