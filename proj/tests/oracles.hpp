#pragma once

// Independent reference implementations used by the tests. Deliberately naive:
// plain loops over std::vector, no shared code with the library kernels.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Pts = std::vector<Vec>;

inline Pts to_points(const Eigen::MatrixXd &m) {
  Pts pts(static_cast<std::size_t>(m.cols()), Vec(static_cast<std::size_t>(m.rows())));
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) pts[j][i] = m(i, j);
  return pts;
}

inline double dist(const Vec &a, const Vec &b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

inline double hausdorff(const Pts &a, const Pts &b) {
  double best = 0.0;
  for (int pass = 0; pass < 2; ++pass) {
    const Pts &from = pass == 0 ? a : b;
    const Pts &to = pass == 0 ? b : a;
    for (const auto &x : from) {
      double nearest = std::numeric_limits<double>::infinity();
      for (const auto &y : to) nearest = std::min(nearest, dist(x, y));
      best = std::max(best, nearest);
    }
  }
  return best;
}

inline std::size_t frechet_index(const Pts &s) {
  std::size_t arg = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < s.size(); ++i) {
    double cost = 0.0;
    for (const auto &y : s) cost += dist(s[i], y) * dist(s[i], y);
    if (cost < best) {
      best = cost;
      arg = i;
    }
  }
  return arg;
}

inline double p_diameter(const Pts &s, double p) {
  double sum = 0.0;
  for (const auto &x : s)
    for (const auto &y : s) sum += std::pow(dist(x, y), p);
  return std::pow(sum / static_cast<double>(s.size() * s.size()), 1.0 / p);
}

inline double max_pairwise(const Pts &s) {
  double best = 0.0;
  for (const auto &x : s)
    for (const auto &y : s) best = std::max(best, dist(x, y));
  return best;
}

// Cyclic Jacobi rotations; returns eigenvalues sorted descending.
inline Vec jacobi_eigenvalues(std::vector<Vec> a) {
  const std::size_t n = a.size();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
    }
  }
  Vec ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a[i][i];
  std::sort(ev.begin(), ev.end(), std::greater<>());
  return ev;
}

inline std::vector<Vec> to_rows(const Eigen::MatrixXd &m) {
  std::vector<Vec> rows(static_cast<std::size_t>(m.rows()), Vec(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) rows[i][j] = m(i, j);
  return rows;
}

inline Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64 &rng,
                                double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = n(rng);
  return m;
}

inline Eigen::MatrixXd random_symmetric(Eigen::Index n, std::mt19937_64 &rng) {
  const Eigen::MatrixXd g = gaussian(n, n, rng);
  return (g + g.transpose()) / 2.0;
}

} // namespace oracle
