#include "mvm/synthdata.hpp"

#include <Eigen/QR>

#include <algorithm>

#include <cmath>
#include <numbers>

namespace mvm {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kSwissRollHeight = 21.0;
constexpr std::uint64_t kRotationStream = 0x9e3779b97f4a7c15ULL;

Point native_point(const ManifoldSpec &spec, std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  switch (spec.kind) {
  case ManifoldKind::circle: {
    const double t = kTwoPi * unit(rng);
    return Eigen::Vector2d(spec.radius * std::cos(t), spec.radius * std::sin(t));
  }
  case ManifoldKind::sphere: {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::Vector3d v;
    do {
      v = Eigen::Vector3d(normal(rng), normal(rng), normal(rng));
    } while (v.norm() < 1e-12);
    return spec.radius * v.normalized();
  }
  case ManifoldKind::helix: {
    const double t = kTwoPi * spec.turns * unit(rng);
    return Eigen::Vector3d(spec.radius * std::cos(t), spec.radius * std::sin(t),
                           spec.pitch * t / kTwoPi);
  }
  case ManifoldKind::swiss_roll: {
    const double t = 1.5 * std::numbers::pi * (1.0 + 2.0 * unit(rng));
    const double h = kSwissRollHeight * unit(rng);
    return spec.scale * Eigen::Vector3d(t * std::cos(t), h, t * std::sin(t));
  }
  }
  throw InputError("unknown manifold kind");
}

double native_residual(const ManifoldSpec &spec, const Point &x) {
  switch (spec.kind) {
  case ManifoldKind::circle:
  case ManifoldKind::sphere:
    return std::abs(x.norm() - spec.radius);
  case ManifoldKind::helix: {
    const double t = kTwoPi * x[2] / spec.pitch;
    const double t_clamped = std::clamp(t, 0.0, kTwoPi * spec.turns);
    const Eigen::Vector3d nearest(spec.radius * std::cos(t_clamped),
                                  spec.radius * std::sin(t_clamped),
                                  spec.pitch * t_clamped / kTwoPi);
    return (x - nearest).norm();
  }
  case ManifoldKind::swiss_roll: {
    const Eigen::Vector3d y = x / spec.scale;
    const double t = std::hypot(y[0], y[2]);
    const double t_clamped = std::clamp(t, 1.5 * std::numbers::pi, 4.5 * std::numbers::pi);
    const double h = std::clamp(y[1], 0.0, kSwissRollHeight);
    const Eigen::Vector3d nearest(t_clamped * std::cos(t_clamped), h,
                                  t_clamped * std::sin(t_clamped));
    return spec.scale * (y - nearest).norm();
  }
  }
  throw InputError("unknown manifold kind");
}

} // namespace

std::string to_string(ManifoldKind kind) {
  switch (kind) {
  case ManifoldKind::circle:
    return "circle";
  case ManifoldKind::sphere:
    return "sphere";
  case ManifoldKind::helix:
    return "helix";
  case ManifoldKind::swiss_roll:
    return "swiss_roll";
  }
  return "?";
}

ManifoldKind parse_manifold_kind(const std::string &name) {
  if (name == "circle") return ManifoldKind::circle;
  if (name == "sphere") return ManifoldKind::sphere;
  if (name == "helix") return ManifoldKind::helix;
  if (name == "swiss_roll") return ManifoldKind::swiss_roll;
  throw InputError("unknown manifold '" + name + "'");
}

void ManifoldSpec::validate() const {
  require(ambient_dim >= native_dim(),
          "manifold " + to_string(kind) + " needs ambient_dim >= " + std::to_string(native_dim()));
  require(std::isfinite(noise_sigma) && noise_sigma >= 0.0, "noise_sigma must be finite and >= 0");
  require(radius > 0.0 && std::isfinite(radius), "radius must be positive");
  if (kind == ManifoldKind::helix) {
    require(pitch > 0.0 && turns > 0.0, "helix needs positive pitch and turns");
  }
  if (kind == ManifoldKind::swiss_roll) {
    require(scale > 0.0, "swiss_roll needs positive scale");
  }
}

Eigen::MatrixXd random_rotation(Eigen::Index dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Eigen::MatrixXd gaussian = Eigen::MatrixXd::NullaryExpr(dim, dim, [&] { return normal(rng); });
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(dim, dim);
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < dim; ++i) {
    if (r(i, i) < 0.0) {
      q.col(i) *= -1.0;
    }
  }
  return q;
}

ManifoldSampler::ManifoldSampler(ManifoldSpec spec) : spec_(spec) {
  spec_.validate();
  const Eigen::Index dim = spec_.ambient_dim;
  rotation_ = dim == spec_.native_dim() ? Eigen::MatrixXd::Identity(dim, dim)
                                        : random_rotation(dim, spec_.seed ^ kRotationStream);
}

SampleSet ManifoldSampler::sample(Eigen::Index k, std::mt19937_64 &rng) const {
  require(k >= 1, "sample_manifold: k must be >= 1");
  const Eigen::Index native = spec_.native_dim();
  SampleSet padded = SampleSet::Zero(spec_.ambient_dim, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    padded.col(i).head(native) = native_point(spec_, rng);
  }
  SampleSet points = rotation_ * padded;
  if (spec_.noise_sigma > 0.0) {
    std::normal_distribution<double> normal(0.0, spec_.noise_sigma);
    for (Eigen::Index j = 0; j < points.cols(); ++j) {
      for (Eigen::Index i = 0; i < points.rows(); ++i) {
        points(i, j) += normal(rng);
      }
    }
  }
  return points;
}

double ManifoldSampler::residual(const Point &x) const {
  require(x.size() == spec_.ambient_dim, "residual: dimension mismatch");
  const Eigen::VectorXd local = rotation_.transpose() * x;
  const Eigen::Index native = spec_.native_dim();
  const double off_plane = local.tail(local.size() - native).norm();
  return std::hypot(native_residual(spec_, local.head(native)), off_plane);
}

SampleSet sample_manifold(const ManifoldSpec &spec, Eigen::Index k) {
  ManifoldSampler sampler(spec);
  std::mt19937_64 rng(spec.seed);
  return sampler.sample(k, rng);
}

SampleSet sample_prior(const PriorSpec &spec, Eigen::Index k, std::mt19937_64 &rng) {
  require(spec.latent_dim >= 1, "prior latent_dim must be >= 1");
  require(k >= 1, "sample_prior: k must be >= 1");
  std::normal_distribution<double> normal(0.0, 1.0);
  SampleSet z(spec.latent_dim, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index i = 0; i < spec.latent_dim; ++i) {
      z(i, j) = normal(rng);
    }
  }
  return z;
}

SampleSet sample_prior(const PriorSpec &spec, Eigen::Index k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_prior(spec, k, rng);
}

Eigen::MatrixXd coordinate_projection(Eigen::Index ambient_dim, Eigen::Index keep) {
  require(keep >= 1 && keep < ambient_dim, "projection must drop at least one coordinate");
  return Eigen::MatrixXd::Identity(keep, ambient_dim);
}

SampleSet degrade(const SampleSet &x, const Eigen::MatrixXd &projection, double noise_sigma,
                  std::mt19937_64 &rng) {
  require(projection.cols() == x.rows(), "degrade: projection does not match point dimension");
  require(projection.rows() < projection.cols(), "degrade: projection must lower the dimension");
  require(noise_sigma >= 0.0, "degrade: noise_sigma must be >= 0");
  SampleSet low = projection * x;
  if (noise_sigma > 0.0) {
    std::normal_distribution<double> normal(0.0, noise_sigma);
    for (Eigen::Index j = 0; j < low.cols(); ++j) {
      for (Eigen::Index i = 0; i < low.rows(); ++i) {
        low(i, j) += normal(rng);
      }
    }
  }
  return low;
}

} // namespace mvm
