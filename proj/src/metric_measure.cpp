#include "mvm/metric_measure.hpp"

#include <Eigen/SVD>

namespace mvm {

Eigen::MatrixXd MetricHandle::embed(const SampleSet &points) const {
  if (embedding_ == nullptr) {
    return points;
  }
  require(points.rows() == embedding_->input_dim(),
          "pullback metric: point dimension does not match embedding input");
  return embedding_->forward(points);
}

double distance(const MetricHandle &metric, const Point &x, const Point &y) {
  require(x.size() == y.size(), "distance: dimension mismatch");
  if (!metric.is_pullback()) {
    return (x - y).norm();
  }
  // Each point is embedded on its own so that d(x,y) and d(y,x) see identical arithmetic.
  const Eigen::VectorXd gx = metric.embed(x);
  const Eigen::VectorXd gy = metric.embed(y);
  return (gx - gy).norm();
}

double frechet_cost(const SampleSet &samples, const MetricHandle &metric, const Point &candidate) {
  require(samples.cols() >= 1, "frechet_cost: empty sample set");
  require(samples.rows() == candidate.size(), "frechet_cost: dimension mismatch");
  const Eigen::MatrixXd embedded = metric.embed(samples);
  const Eigen::VectorXd center = metric.embed(candidate);
  return (embedded.colwise() - center).colwise().squaredNorm().sum();
}

Eigen::Index frechet_mean_discrete(const SampleSet &samples, const MetricHandle &metric) {
  require(samples.cols() >= 1, "frechet_mean_discrete: empty sample set");
  const Eigen::MatrixXd embedded = metric.embed(samples);
  const Eigen::Index k = embedded.cols();
  Eigen::Index best = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < k; ++i) {
    double cost = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      cost += (embedded.col(i) - embedded.col(j)).squaredNorm();
    }
    if (cost < best_cost) {
      best_cost = cost;
      best = i;
    }
  }
  return best;
}

Eigen::VectorXd embedded_centroid(const SampleSet &samples, const MetricHandle &metric) {
  require(samples.cols() >= 1, "embedded_centroid: empty sample set");
  return column_mean(metric.embed(samples));
}

double centroid_distance(const SampleSet &real, const SampleSet &fake, const MetricHandle &metric) {
  require(real.cols() >= 1 && fake.cols() >= 1, "centroid_distance: empty sample set");
  require(real.rows() == fake.rows(), "centroid_distance: dimension mismatch");
  return (embedded_centroid(real, metric) - embedded_centroid(fake, metric)).norm();
}

double p_diameter(const SampleSet &samples, const MetricHandle &metric, double p) {
  require(samples.cols() >= 1, "p_diameter: empty sample set");
  require(p >= 1.0, "p_diameter: p must be >= 1");
  return p_diameter(metric.embed(samples), p);
}

double hausdorff_distance(const SampleSet &a, const SampleSet &b, const MetricHandle &metric) {
  require(a.cols() >= 1 && b.cols() >= 1, "hausdorff_distance: empty sample set");
  require(a.rows() == b.rows(), "hausdorff_distance: dimension mismatch");
  return hausdorff_distance(metric.embed(a), metric.embed(b));
}

DistanceMatrix distance_matrix(const SampleSet &samples, const MetricHandle &metric,
                               bool normalize) {
  require(samples.cols() >= 2, "distance_matrix: need at least two points");
  DistanceMatrix result;
  result.entries = pairwise_distances(metric.embed(samples));
  result.normalized = normalize;
  if (normalize) {
    const double peak = result.entries.maxCoeff();
    if (peak > 0.0) {
      result.entries /= peak;
    }
  }
  return result;
}

std::vector<double> eigenvalues_descending(const Eigen::MatrixXd &symmetric) {
  require(symmetric.rows() == symmetric.cols(), "eigenvalues: matrix must be square");
  const double scale = std::max(1.0, symmetric.cwiseAbs().maxCoeff());
  require((symmetric - symmetric.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale,
          "eigenvalues: matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric, Eigen::EigenvaluesOnly);
  require(solver.info() == Eigen::Success, "eigenvalues: solver did not converge");
  const Eigen::VectorXd ascending = solver.eigenvalues();
  return {ascending.reverse().begin(), ascending.reverse().end()};
}

std::vector<double> top_eigenvalues(const DistanceMatrix &matrix, Eigen::Index count) {
  require(count >= 0 && count <= matrix.entries.rows(), "top_eigenvalues: count exceeds size");
  auto all = eigenvalues_descending(matrix.entries);
  all.resize(static_cast<std::size_t>(count));
  return all;
}

Eigen::MatrixXd pca_project_2d(const Eigen::MatrixXd &points) {
  require(points.cols() >= 2, "pca_project_2d: need at least two points");
  const Eigen::MatrixXd centered = points.colwise() - points.rowwise().mean();
  Eigen::MatrixXd projected = Eigen::MatrixXd::Zero(2, points.cols());
  if (centered.cwiseAbs().maxCoeff() == 0.0) {
    return projected;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU);
  const Eigen::Index dirs = std::min<Eigen::Index>(2, svd.matrixU().cols());
  projected.topRows(dirs) = svd.matrixU().leftCols(dirs).transpose() * centered;
  return projected;
}

} // namespace mvm
