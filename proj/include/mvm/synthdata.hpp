#pragma once

#include "mvm/common.hpp"

#include <cstdint>
#include <random>
#include <string>

namespace mvm {

enum class ManifoldKind { circle, sphere, helix, swiss_roll };

std::string to_string(ManifoldKind kind);
ManifoldKind parse_manifold_kind(const std::string &name);

struct ManifoldSpec {
  ManifoldKind kind = ManifoldKind::circle;
  double radius = 1.0; // circle, sphere, helix
  double pitch = 1.0;  // helix: rise per turn
  double turns = 2.0;  // helix
  double scale = 0.1;  // swiss_roll
  Eigen::Index ambient_dim = 2;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;

  /// Dimension of the space the manifold is natively parameterized in (2 or 3).
  Eigen::Index native_dim() const { return kind == ManifoldKind::circle ? 2 : 3; }
  void validate() const;
};

/// Samples a manifold, zero-padded and rotated into R^D when D exceeds the native
/// dimension. The rotation is fixed by spec.seed.
class ManifoldSampler {
public:
  explicit ManifoldSampler(ManifoldSpec spec);

  const ManifoldSpec &spec() const { return spec_; }
  /// D x D orthogonal matrix; identity when D equals the native dimension.
  const Eigen::MatrixXd &rotation() const { return rotation_; }

  /// k i.i.d. points: uniform in the parameterization plus isotropic Gaussian noise.
  SampleSet sample(Eigen::Index k, std::mt19937_64 &rng) const;

  /// Distance-like residual of the noiseless manifold constraint; 0 on the manifold.
  double residual(const Point &x) const;

private:
  ManifoldSpec spec_;
  Eigen::MatrixXd rotation_;
};

/// Deterministic under spec.seed.
SampleSet sample_manifold(const ManifoldSpec &spec, Eigen::Index k);

struct PriorSpec {
  Eigen::Index latent_dim = 4;
};

/// k standard Gaussian vectors in R^m.
SampleSet sample_prior(const PriorSpec &spec, Eigen::Index k, std::mt19937_64 &rng);
SampleSet sample_prior(const PriorSpec &spec, Eigen::Index k, std::uint64_t seed);

/// Keeps the first `keep` coordinates of R^D.
Eigen::MatrixXd coordinate_projection(Eigen::Index ambient_dim, Eigen::Index keep);

/// x_L = P x + noise, column-aligned with the source batch.
SampleSet degrade(const SampleSet &x, const Eigen::MatrixXd &projection, double noise_sigma,
                  std::mt19937_64 &rng);

/// Seeded Haar-distributed orthogonal matrix.
Eigen::MatrixXd random_rotation(Eigen::Index dim, std::uint64_t seed);

} // namespace mvm
