#include "perfpd/distmap.hpp"

#include <algorithm>
#include <cmath>

namespace perfpd {

namespace {

void check_covariance(const Matrix& cov) {
  require(cov.rows() == cov.cols(), "base covariance must be square");
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  require((cov - cov.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale,
          "base covariance must be symmetric");
  if (cov.size() == 0) return;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov, Eigen::EigenvaluesOnly);
  require(eig.eigenvalues().minCoeff() >= -1e-10 * scale,
          "base covariance must be positive semidefinite");
}

}  // namespace

BaseDistribution::BaseDistribution(Vector mean, Matrix cov, Sampler sampler)
    : mean_(std::move(mean)), cov_(std::move(cov)), sampler_(std::move(sampler)) {
  require_size(cov_.rows(), mean_.size(), "base covariance");
  check_covariance(cov_);
}

BaseDistribution BaseDistribution::gaussian(Vector mean, Matrix cov) {
  require_size(cov.rows(), mean.size(), "gaussian covariance");
  check_covariance(cov);
  // Symmetric square root so that singular covariances are handled too.
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (cov + cov.transpose()));
  const Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  Matrix factor = eig.eigenvectors() * root.asDiagonal();
  Vector center = mean;
  auto sampler = [factor = std::move(factor), center = std::move(center)](
                     Rng& rng, Eigen::Ref<Vector> out) {
    std::normal_distribution<double> normal;
    Vector xi(factor.cols());
    for (Index i = 0; i < xi.size(); ++i) xi[i] = normal(rng);
    out.noalias() = factor * xi;
    out += center;
  };
  return BaseDistribution(std::move(mean), std::move(cov), std::move(sampler));
}

BaseDistribution BaseDistribution::point_mass(Vector at) {
  const Index k = at.size();
  auto sampler = [at](Rng&, Eigen::Ref<Vector> out) { out = at; };
  return BaseDistribution(std::move(at), Matrix::Zero(k, k), std::move(sampler));
}

BaseDistribution BaseDistribution::custom(Vector mean, Matrix cov, Sampler sampler) {
  require(static_cast<bool>(sampler), "custom base distribution needs a sampler");
  return BaseDistribution(std::move(mean), std::move(cov), std::move(sampler));
}

void BaseDistribution::draw(Rng& rng, Eigen::Ref<Vector> out) const {
  require_size(out.size(), dim(), "base draw buffer");
  sampler_(rng, out);
}

Vector BaseDistribution::draw(Rng& rng) const {
  Vector out(dim());
  sampler_(rng, out);
  return out;
}

LocationFamilyMap::LocationFamilyMap(BaseDistribution base, Matrix performative)
    : base_(std::move(base)), a_(std::move(performative)) {
  require_size(a_.rows(), base_.dim(), "performative matrix rows");
}

Vector LocationFamilyMap::sample(const Vector& theta, Rng& rng) const {
  require_size(theta.size(), decision_dim(), "decision");
  Vector z = base_.draw(rng);
  z.noalias() += a_ * theta;
  return z;
}

Vector LocationFamilyMap::shift(const Vector& base_draw, const Vector& theta) const {
  require_size(theta.size(), decision_dim(), "decision");
  require_size(base_draw.size(), data_dim(), "base draw");
  Vector z = base_draw;
  z.noalias() += a_ * theta;
  return z;
}

double LocationFamilyMap::sensitivity() const { return largest_singular_value(a_); }

double largest_singular_value(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

double smallest_singular_value(const Matrix& m) {
  if (m.size() == 0 || m.rows() < m.cols()) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

RiskConstants risk_constants(const LocationFamilyMap& map, const LossConstants& loss) {
  const double beta = loss.smoothness;
  const double gz = loss.convexity_z;
  const double gt = loss.convexity_theta;
  if (!(gz > 0.0) || !(gt - beta * beta / gz > 0.0)) {
    throw NotStronglyConvex("loss is not strongly convex enough: need gamma_theta - beta^2/gamma_Z > 0");
  }
  const Matrix& a = map.performative_matrix();
  const double eps = largest_singular_value(a);
  const double smin = smallest_singular_value(a);
  RiskConstants out;
  out.lipschitz = loss.lipschitz_theta + loss.lipschitz_z * eps;
  out.strong_convexity = std::max(gt - beta * beta / gz, gt - 2.0 * eps * beta + gz * smin * smin);
  return out;
}

NoiseSpec NoiseSpec::standard_normal(Index dim) {
  require(dim > 0, "noise dimension must be positive");
  NoiseSpec spec;
  spec.dim = dim;
  spec.kind = NoiseKind::StandardNormal;
  spec.kappa1 = 1.0;
  spec.kappa2 = static_cast<double>(dim);
  spec.kappa3 = 3.0 * static_cast<double>(dim);
  return spec;
}

Vector NoiseSpec::draw(Rng& rng) const {
  std::normal_distribution<double> normal;
  Vector u(dim);
  for (Index i = 0; i < dim; ++i) u[i] = normal(rng);
  return u;
}

Vector Simulator::observe(const Vector& theta) {
  Vector z = map_->sample(theta, rng_);
  ++queries_;
  return z;
}

Matrix Simulator::observe_many(const Vector& theta, std::size_t count) {
  require_size(theta.size(), map_->decision_dim(), "decision");
  Matrix out(map_->data_dim(), static_cast<Index>(count));
  const Vector offset = map_->performative_matrix() * theta;
  for (std::size_t j = 0; j < count; ++j) {
    auto col = out.col(static_cast<Index>(j));
    map_->base().draw(rng_, col);
    col += offset;
  }
  queries_ += count;
  return out;
}

}  // namespace perfpd
