#pragma once

#include "mvm/common.hpp"
#include "mvm/tinynet.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace mvm {

// ---------------------------------------------------------------------------
// Euclidean kernels. Points are the columns of the argument; any dense Eigen
// expression with a floating-point scalar is accepted.
// ---------------------------------------------------------------------------

/// Arithmetic mean of the columns.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1>
column_mean(const Eigen::MatrixBase<Derived> &points) {
  require(points.cols() >= 1, "empty sample set");
  return points.rowwise().mean();
}

/// k x k matrix of Euclidean distances between columns.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
pairwise_distances(const Eigen::MatrixBase<Derived> &points) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index k = points.cols();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> d(k, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    d(j, j) = Scalar(0);
    for (Eigen::Index i = j + 1; i < k; ++i) {
      const Scalar v = (points.col(i) - points.col(j)).norm();
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

/// Empirical p-diameter under the uniform measure: ((1/k^2) sum_{i,j} d_ij^p)^(1/p),
/// summed over all ordered pairs including the diagonal. Accumulates in the log domain
/// for p > 32.
template <typename Derived>
typename Derived::Scalar p_diameter(const Eigen::MatrixBase<Derived> &points, double p) {
  using Scalar = typename Derived::Scalar;
  require(points.cols() >= 1, "p_diameter: empty sample set");
  require(p >= 1.0, "p_diameter: p must be >= 1");
  const Eigen::Index k = points.cols();
  const Scalar pairs = Scalar(k) * Scalar(k);

  if (p == 2.0) {
    Scalar sum(0);
    for (Eigen::Index j = 0; j < k; ++j) {
      for (Eigen::Index i = 0; i < k; ++i) {
        sum += (points.col(i) - points.col(j)).squaredNorm();
      }
    }
    return std::sqrt(sum / pairs);
  }

  if (p <= 32.0) {
    Scalar sum(0);
    for (Eigen::Index j = 0; j < k; ++j) {
      for (Eigen::Index i = 0; i < k; ++i) {
        sum += std::pow((points.col(i) - points.col(j)).norm(), Scalar(p));
      }
    }
    return std::pow(sum / pairs, Scalar(1.0 / p));
  }

  // log-sum-exp over p * log d; zero distances contribute nothing
  std::vector<Scalar> logs;
  logs.reserve(static_cast<std::size_t>(k * k));
  Scalar peak = -std::numeric_limits<Scalar>::infinity();
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index i = 0; i < k; ++i) {
      const Scalar d = (points.col(i) - points.col(j)).norm();
      if (d > Scalar(0)) {
        const Scalar l = Scalar(p) * std::log(d);
        logs.push_back(l);
        peak = std::max(peak, l);
      }
    }
  }
  if (logs.empty()) {
    return Scalar(0);
  }
  Scalar acc(0);
  for (Scalar l : logs) {
    acc += std::exp(l - peak);
  }
  const Scalar log_mean = peak + std::log(acc) - std::log(pairs);
  return std::exp(log_mean / Scalar(p));
}

/// max{ sup_a inf_b d(a,b), sup_b inf_a d(a,b) } with d Euclidean.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar hausdorff_distance(const Eigen::MatrixBase<DerivedA> &a,
                                             const Eigen::MatrixBase<DerivedB> &b) {
  using Scalar = typename DerivedA::Scalar;
  require(a.cols() >= 1 && b.cols() >= 1, "hausdorff_distance: empty sample set");
  require(a.rows() == b.rows(), "hausdorff_distance: dimension mismatch");
  auto directed = [](const auto &from, const auto &to) {
    Scalar worst(0);
    for (Eigen::Index i = 0; i < from.cols(); ++i) {
      Scalar nearest = std::numeric_limits<Scalar>::infinity();
      for (Eigen::Index j = 0; j < to.cols(); ++j) {
        nearest = std::min(nearest, (from.col(i) - to.col(j)).norm());
      }
      worst = std::max(worst, nearest);
    }
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

// ---------------------------------------------------------------------------
// Metric handles: d_E or the pullback of d_E through an embedding network.
// ---------------------------------------------------------------------------

/// Distance function on R^D. A pullback handle keeps a non-owning pointer to the
/// embedding network; the network must outlive the handle and must not be updated
/// while the handle is in use.
class MetricHandle {
public:
  static MetricHandle euclidean() { return MetricHandle(nullptr); }
  static MetricHandle pullback(const DenseNetwork &embedding) { return MetricHandle(&embedding); }

  bool is_pullback() const { return embedding_ != nullptr; }
  const DenseNetwork *embedding() const { return embedding_; }

  /// Image of the points in the space where the metric is Euclidean.
  Eigen::MatrixXd embed(const SampleSet &points) const;

private:
  explicit MetricHandle(const DenseNetwork *embedding) : embedding_(embedding) {}
  const DenseNetwork *embedding_;
};

struct DistanceMatrix {
  Eigen::MatrixXd entries;
  bool normalized = false;
};

double distance(const MetricHandle &metric, const Point &x, const Point &y);

/// Sum of squared distances from a candidate to every sample.
double frechet_cost(const SampleSet &samples, const MetricHandle &metric, const Point &candidate);

/// Index of the sample minimizing sum_j d^2(x_i, x_j); ties go to the smallest index.
Eigen::Index frechet_mean_discrete(const SampleSet &samples, const MetricHandle &metric);

Eigen::VectorXd embedded_centroid(const SampleSet &samples, const MetricHandle &metric);

double centroid_distance(const SampleSet &real, const SampleSet &fake, const MetricHandle &metric);

double p_diameter(const SampleSet &samples, const MetricHandle &metric, double p);

double hausdorff_distance(const SampleSet &a, const SampleSet &b, const MetricHandle &metric);

/// Pairwise distances; with normalize, divided by the largest entry unless every
/// distance is zero.
DistanceMatrix distance_matrix(const SampleSet &samples, const MetricHandle &metric,
                               bool normalize);

/// The `count` algebraically largest eigenvalues, descending.
std::vector<double> top_eigenvalues(const DistanceMatrix &matrix, Eigen::Index count);

/// Full spectrum of a symmetric matrix, descending.
std::vector<double> eigenvalues_descending(const Eigen::MatrixXd &symmetric);

/// Centered data projected on its two leading principal directions; returns 2 x N.
Eigen::MatrixXd pca_project_2d(const Eigen::MatrixXd &points);

} // namespace mvm
