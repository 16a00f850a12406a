#include "perfpd/estimator.hpp"

#include <algorithm>
#include <cmath>

namespace perfpd {

double default_zeta(double kappa1, double kappa3, std::size_t t) {
  require(kappa1 > 0.0 && kappa3 > 0.0, "noise constants must be positive");
  require(t >= 1, "step index starts at 1");
  return 2.0 / (kappa1 * static_cast<double>(t) + 2.0 * kappa3);
}

StepSizeRule StepSizeRule::theoretical(double kappa1, double kappa3) {
  require(kappa1 > 0.0 && kappa3 > 0.0, "noise constants must be positive");
  return StepSizeRule(Kind::Theoretical, kappa1, kappa3);
}

StepSizeRule StepSizeRule::shifted(double offset) {
  require(offset > -1.0, "shifted step-size offset must exceed -1");
  return StepSizeRule(Kind::Shifted, offset, 0.0);
}

StepSizeRule StepSizeRule::constant(double value) {
  require(value > 0.0, "constant step size must be positive");
  return StepSizeRule(Kind::Constant, value, 0.0);
}

double StepSizeRule::operator()(std::size_t t) const {
  switch (kind_) {
    case Kind::Theoretical:
      return default_zeta(a_, b_, t);
    case Kind::Shifted:
      return 1.0 / (static_cast<double>(t) + a_);
    case Kind::Constant:
      return a_;
  }
  return 0.0;
}

EstimatorState EstimatorState::zero(Index data_dim, Index decision_dim) {
  return EstimatorState{Matrix::Zero(data_dim, decision_dim), 1};
}

void apply_update(EstimatorState& state, const Vector& u, const Vector& z, const Vector& z_perturbed, double zeta) {
  require_size(u.size(), state.a_hat.cols(), "exploration noise");
  require_size(z.size(), state.a_hat.rows(), "observation");
  require_size(z_perturbed.size(), state.a_hat.rows(), "perturbed observation");
  Vector residual = z_perturbed - z;
  residual.noalias() -= state.a_hat * u;
  state.a_hat.noalias() += (zeta * residual) * u.transpose();
  ++state.t;
}

void apply_update(EstimatorState& state, const Vector& u, const Vector& z, const Vector& z_perturbed,
                  const StepSizeRule& rule) {
  apply_update(state, u, z, z_perturbed, rule(state.t));
}

EstimatorState ls_update(EstimatorState state, const Vector& u, const Vector& z, const Vector& z_perturbed,
                         const StepSizeRule& rule) {
  apply_update(state, u, z, z_perturbed, rule);
  return state;
}

double estimation_error(const EstimatorState& state, const Matrix& a_true) {
  require_size(a_true.rows(), state.a_hat.rows(), "true performative matrix rows");
  require_size(a_true.cols(), state.a_hat.cols(), "true performative matrix cols");
  return (state.a_hat - a_true).squaredNorm();
}

double decay_constant(const NoiseSpec& noise, double initial_error, double base_trace) {
  const double t0 = 2.0 * noise.kappa3 / noise.kappa1;
  return std::max((1.0 + t0) * initial_error, 8.0 * noise.kappa2 * base_trace / (noise.kappa1 * noise.kappa1));
}

double decay_bound(const NoiseSpec& noise, double alpha_bar, std::size_t updates) {
  return alpha_bar / (static_cast<double>(updates) + 2.0 * noise.kappa3 / noise.kappa1);
}

double sequence_bound(double t0, double alpha, double s1, std::size_t t) {
  return std::max((1.0 + t0) * s1, alpha) / (static_cast<double>(t) + t0);
}

BaseSamplePool::BaseSamplePool(Matrix samples) : samples_(std::move(samples)) {}

BaseSamplePool BaseSamplePool::draw(Simulator& simulator, std::size_t n) {
  return BaseSamplePool(simulator.observe_many(Vector::Zero(simulator.map().decision_dim()), n));
}

BaseSamplePool BaseSamplePool::moment_matched(const BaseDistribution& base) {
  const Index k = base.dim();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(base.covariance());
  const Matrix root = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  const double scale = std::sqrt(static_cast<double>(k));
  Matrix points(k, 2 * k);
  for (Index j = 0; j < k; ++j) {
    points.col(2 * j) = base.mean() + scale * root.col(j);
    points.col(2 * j + 1) = base.mean() - scale * root.col(j);
  }
  return BaseSamplePool(std::move(points));
}

}  // namespace perfpd
