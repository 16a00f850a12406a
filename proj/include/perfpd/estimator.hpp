#pragma once

#include <cstddef>

#include "perfpd/common.hpp"
#include "perfpd/distmap.hpp"

namespace perfpd {

/// zeta_t = 2 / (kappa1 t + 2 kappa3). Always below 2 / kappa3.
double default_zeta(double kappa1, double kappa3, std::size_t t);

/// Step-size rule of the online least-squares recursion.
class StepSizeRule {
public:
  enum class Kind { Theoretical, Shifted, Constant };

  /// 2 / (kappa1 t + 2 kappa3).
  static StepSizeRule theoretical(double kappa1, double kappa3);
  /// 1 / (t + offset).
  static StepSizeRule shifted(double offset);
  static StepSizeRule constant(double value);

  double operator()(std::size_t t) const;
  Kind kind() const { return kind_; }

private:
  StepSizeRule(Kind kind, double a, double b) : kind_(kind), a_(a), b_(b) {}

  Kind kind_;
  double a_;
  double b_;
};

/// Online least-squares estimate of the performative matrix. `t` is the index
/// of the next update, so a fresh state has t = 1 and A_hat = 0.
struct EstimatorState {
  Matrix a_hat;
  std::size_t t = 1;

  static EstimatorState zero(Index data_dim, Index decision_dim);
};

/// A_hat += zeta (Z' - Z - A_hat u) u^T, then t += 1.
void apply_update(EstimatorState& state, const Vector& u, const Vector& z, const Vector& z_perturbed, double zeta);
void apply_update(EstimatorState& state, const Vector& u, const Vector& z, const Vector& z_perturbed,
                  const StepSizeRule& rule);

EstimatorState ls_update(EstimatorState state, const Vector& u, const Vector& z, const Vector& z_perturbed,
                         const StepSizeRule& rule);

/// ||A_hat - A||_F^2.
double estimation_error(const EstimatorState& state, const Matrix& a_true);

/// max{(1 + 2 kappa3/kappa1) ||A_hat_1 - A||_F^2, 8 kappa2 tr(Sigma) / kappa1^2}.
double decay_constant(const NoiseSpec& noise, double initial_error, double base_trace);

/// Predicted bound on E||A_hat - A||_F^2 after `updates` updates of the
/// theoretical schedule: alpha_bar / (updates + 2 kappa3 / kappa1).
double decay_bound(const NoiseSpec& noise, double alpha_bar, std::size_t updates);

/// max{(1 + t0) s1, alpha} / (t + t0): bound for S_{t+1} <= (1 - 2/(t+t0)) S_t + alpha/(t+t0)^2.
double sequence_bound(double t0, double alpha, double s1, std::size_t t);

/// Frozen base samples Z_{0,i}, one per column.
class BaseSamplePool {
public:
  /// Observes `n` draws at theta = 0.
  static BaseSamplePool draw(Simulator& simulator, std::size_t n);

  /// 2k points with the exact mean and covariance of `base`; pool averages of
  /// functions that are quadratic in Z equal their expectation under any
  /// distribution with those moments.
  static BaseSamplePool moment_matched(const BaseDistribution& base);

  explicit BaseSamplePool(Matrix samples);

  std::size_t size() const { return static_cast<std::size_t>(samples_.cols()); }
  Index dim() const { return samples_.rows(); }
  const Matrix& samples() const { return samples_; }

private:
  Matrix samples_;
};

}  // namespace perfpd
