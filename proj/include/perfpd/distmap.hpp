#pragma once

#include <cstddef>
#include <functional>

#include "perfpd/common.hpp"

namespace perfpd {

/// The base distribution D0 of a location family. The sampler is pluggable;
/// mean and covariance are simulator-side ground truth and are never handed
/// to a solver.
class BaseDistribution {
public:
  using Sampler = std::function<void(Rng&, Eigen::Ref<Vector>)>;

  /// Multivariate normal N(mean, cov). `cov` may be singular.
  static BaseDistribution gaussian(Vector mean, Matrix cov);

  /// Degenerate distribution concentrated at `at`.
  static BaseDistribution point_mass(Vector at);

  /// Arbitrary sampler whose first two moments are `mean` and `cov`.
  static BaseDistribution custom(Vector mean, Matrix cov, Sampler sampler);

  Index dim() const { return mean_.size(); }
  const Vector& mean() const { return mean_; }
  const Matrix& covariance() const { return cov_; }

  void draw(Rng& rng, Eigen::Ref<Vector> out) const;
  Vector draw(Rng& rng) const;

private:
  BaseDistribution(Vector mean, Matrix cov, Sampler sampler);

  Vector mean_;
  Matrix cov_;
  Sampler sampler_;
};

/// Location family D(theta): Z = Z0 + A theta with Z0 ~ D0.
class LocationFamilyMap {
public:
  LocationFamilyMap(BaseDistribution base, Matrix performative);

  Index data_dim() const { return a_.rows(); }
  Index decision_dim() const { return a_.cols(); }
  const Matrix& performative_matrix() const { return a_; }
  const BaseDistribution& base() const { return base_; }

  /// Independent draw from D(theta).
  Vector sample(const Vector& theta, Rng& rng) const;

  /// Common-random-numbers mode: the point of D(theta) coupled to `base_draw`.
  Vector shift(const Vector& base_draw, const Vector& theta) const;

  /// Largest singular value of A; upper-bounds the Wasserstein-1 sensitivity.
  double sensitivity() const;

private:
  BaseDistribution base_;
  Matrix a_;
};

double largest_singular_value(const Matrix& m);

/// min over unit theta of ||M theta||; zero when M has fewer rows than columns.
double smallest_singular_value(const Matrix& m);

struct LossConstants {
  double smoothness;            // beta
  double lipschitz_theta;       // L_theta
  double lipschitz_z;           // L_Z
  double convexity_theta;       // gamma_theta
  double convexity_z;           // gamma_Z
};

struct RiskConstants {
  double lipschitz;             // bound on the Lipschitz constant of PR
  double strong_convexity;      // lower bound on the modulus of PR
};

class NotStronglyConvex : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Lipschitz and strong-convexity constants of the performative risk implied
/// by the loss constants and the performative matrix.
/// Throws NotStronglyConvex unless gamma_theta - beta^2 / gamma_Z > 0.
RiskConstants risk_constants(const LocationFamilyMap& map, const LossConstants& loss);

enum class NoiseKind { StandardNormal };

/// Exploration noise u_t together with the moment constants
/// kappa1 I <= E[u u^T], E||u||^2 <= kappa2, E[||u||^2 u u^T] <= kappa3 E[u u^T].
struct NoiseSpec {
  Index dim = 0;
  NoiseKind kind = NoiseKind::StandardNormal;
  double kappa1 = 1.0;
  double kappa2 = 0.0;
  double kappa3 = 0.0;

  static NoiseSpec standard_normal(Index dim);

  Vector draw(Rng& rng) const;
};

/// The environment a solver interacts with. Every draw from D(theta) is a
/// query and is counted.
class Simulator {
public:
  Simulator(const LocationFamilyMap& map, Rng rng) : map_(&map), rng_(std::move(rng)) {}

  Vector observe(const Vector& theta);

  /// `count` independent draws from D(theta), one per column.
  Matrix observe_many(const Vector& theta, std::size_t count);

  std::size_t queries() const { return queries_; }
  const LocationFamilyMap& map() const { return *map_; }

private:
  const LocationFamilyMap* map_;
  Rng rng_;
  std::size_t queries_ = 0;
};

}  // namespace perfpd
