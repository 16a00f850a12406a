#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "perfpd/common.hpp"
#include "perfpd/convex_qp.hpp"
#include "perfpd/distmap.hpp"

namespace perfpd {

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

/// A loss l(theta; Z) with analytic gradients in both arguments.
class LossSpec {
public:
  virtual ~LossSpec() = default;

  virtual Index decision_dim() const = 0;
  virtual Index data_dim() const = 0;
  virtual double value(const Vector& theta, const Vector& z) const = 0;

  /// grad_theta += d l / d theta, grad_z += d l / d Z. Hot path of the
  /// pool-averaged gradient; implementations must not allocate.
  virtual void accumulate_gradients(const Vector& theta, const Vector& z, Eigen::Ref<Vector> grad_theta,
                                    Eigen::Ref<Vector> grad_z) const = 0;

  /// Regularity constants, when the author of the loss can state them.
  virtual std::optional<LossConstants> constants() const { return std::nullopt; }

  Vector grad_theta(const Vector& theta, const Vector& z) const;
  Vector grad_z(const Vector& theta, const Vector& z) const;
};

/// l = 1/2 theta^T Q theta + theta^T M Z + 1/2 Z^T P Z + q^T theta + p^T Z.
/// Lipschitz constants are taken over ||theta|| <= theta_radius, ||Z|| <= data_radius
/// (infinite by default). Smoothness is the Lipschitz constant of the full
/// gradient with respect to Z, ||[M; P]||.
class QuadraticLoss final : public LossSpec {
public:
  QuadraticLoss(Matrix q_tt, Matrix m_tz, Matrix p_zz, Vector q_t, Vector p_z,
                double theta_radius = std::numeric_limits<double>::infinity(),
                double data_radius = std::numeric_limits<double>::infinity());

  Index decision_dim() const override { return q_tt_.rows(); }
  Index data_dim() const override { return p_zz_.rows(); }
  double value(const Vector& theta, const Vector& z) const override;
  void accumulate_gradients(const Vector& theta, const Vector& z, Eigen::Ref<Vector> grad_theta,
                            Eigen::Ref<Vector> grad_z) const override;
  std::optional<LossConstants> constants() const override { return constants_; }

  const Matrix& theta_hessian() const { return q_tt_; }
  const Matrix& cross() const { return m_tz_; }
  const Matrix& data_hessian() const { return p_zz_; }

private:
  Matrix q_tt_, m_tz_, p_zz_;
  Vector q_t_, p_z_;
  LossConstants constants_{};
};

/// Sum over tasks of 1/2 (y_i - theta_i^T x_i)^2. Z stacks (x_1, y_1, ..., x_N, y_N)
/// and theta stacks (theta_1, ..., theta_N).
class MultiTaskSquaredLoss final : public LossSpec {
public:
  MultiTaskSquaredLoss(Index tasks, Index task_dim);

  Index decision_dim() const override { return tasks_ * task_dim_; }
  Index data_dim() const override { return tasks_ * (task_dim_ + 1); }
  double value(const Vector& theta, const Vector& z) const override;
  void accumulate_gradients(const Vector& theta, const Vector& z, Eigen::Ref<Vector> grad_theta,
                            Eigen::Ref<Vector> grad_z) const override;

  Index tasks() const { return tasks_; }
  Index task_dim() const { return task_dim_; }

private:
  Index tasks_;
  Index task_dim_;
};

/// Negative portfolio return with ridge term: -z^T theta + xi ||theta||^2.
class PortfolioLoss final : public LossSpec {
public:
  PortfolioLoss(Index assets, double xi);

  Index decision_dim() const override { return assets_; }
  Index data_dim() const override { return assets_; }
  double value(const Vector& theta, const Vector& z) const override;
  void accumulate_gradients(const Vector& theta, const Vector& z, Eigen::Ref<Vector> grad_theta,
                            Eigen::Ref<Vector> grad_z) const override;

  double xi() const { return xi_; }

private:
  Index assets_;
  double xi_;
};

// ---------------------------------------------------------------------------
// Constraints g(theta) <= 0
// ---------------------------------------------------------------------------

struct ConstraintConstants {
  double lipschitz = 0.0;  // L_g
  double bound = 0.0;      // C >= ||g(theta)|| on the feasible set
};

class ConstraintSet {
public:
  virtual ~ConstraintSet() = default;

  virtual Index count() const = 0;
  virtual Index decision_dim() const = 0;
  virtual Vector values(const Vector& theta) const = 0;
  virtual Matrix jacobian(const Vector& theta) const = 0;

  /// J(theta)^T lambda.
  virtual Vector jacobian_transpose_times(const Vector& theta, const Vector& lambda) const;

  virtual ConstraintConstants constants() const = 0;
};

/// Explicit list of convex quadratic (or affine) constraints.
class QuadraticConstraintSet final : public ConstraintSet {
public:
  QuadraticConstraintSet(Index decision_dim, std::vector<QuadraticConstraint> constraints,
                         ConstraintConstants constants);

  Index count() const override { return static_cast<Index>(constraints_.size()); }
  Index decision_dim() const override { return dim_; }
  Vector values(const Vector& theta) const override;
  Matrix jacobian(const Vector& theta) const override;
  ConstraintConstants constants() const override { return constants_; }

  const std::vector<QuadraticConstraint>& constraints() const { return constraints_; }

private:
  Index dim_;
  std::vector<QuadraticConstraint> constraints_;
  ConstraintConstants constants_;
};

/// Edge proximity constraints 1/2 ||theta_i - theta_j||^2 - offset_e <= 0.
class ProximityConstraints final : public ConstraintSet {
public:
  ProximityConstraints(Index tasks, Index task_dim, std::vector<std::pair<int, int>> edges,
                       Vector offsets, ConstraintConstants constants);

  Index count() const override { return static_cast<Index>(edges_.size()); }
  Index decision_dim() const override { return tasks_ * task_dim_; }
  Vector values(const Vector& theta) const override;
  Matrix jacobian(const Vector& theta) const override;
  Vector jacobian_transpose_times(const Vector& theta, const Vector& lambda) const override;
  ConstraintConstants constants() const override { return constants_; }

  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  const Vector& offsets() const { return offsets_; }

private:
  Index tasks_;
  Index task_dim_;
  std::vector<std::pair<int, int>> edges_;
  Vector offsets_;
  ConstraintConstants constants_;
};

// ---------------------------------------------------------------------------
// Feasible set Theta
// ---------------------------------------------------------------------------

class FeasibleSet {
public:
  enum class Kind { Ball, Box, BallBox };

  static FeasibleSet ball(Index dim, double radius);
  static FeasibleSet box(Vector lower, Vector upper);
  static FeasibleSet ball_box(double radius, Vector lower, Vector upper);

  Kind kind() const { return kind_; }
  Index dim() const { return dim_; }
  /// Box bounds; empty for a plain ball.
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }

  /// Upper bound R on ||theta|| over the set.
  double radius() const;

  /// Euclidean projection. For the ball-box intersection the multiplier of the
  /// ball constraint is found by bisection.
  Vector project(const Vector& y) const;

  bool contains(const Vector& x, double tolerance = 1e-12) const;

private:
  FeasibleSet(Kind kind, Index dim, double radius, Vector lower, Vector upper);

  Vector project_ball(const Vector& y) const;
  Vector project_box(const Vector& y) const;

  Kind kind_;
  Index dim_;
  double radius_;
  Vector lower_;
  Vector upper_;
};

// ---------------------------------------------------------------------------
// Ground truth (evaluation only)
// ---------------------------------------------------------------------------

/// Closed-form performative risk with its constrained minimizer.
class RiskOracle {
public:
  RiskOracle(std::function<double(const Vector&)> risk, Vector theta_po, double pr_min)
      : risk_(std::move(risk)), theta_po_(std::move(theta_po)), pr_min_(pr_min) {}

  double pr(const Vector& theta) const { return risk_(theta); }
  const Vector& theta_po() const { return theta_po_; }
  double pr_min() const { return pr_min_; }

private:
  std::function<double(const Vector&)> risk_;
  Vector theta_po_;
  double pr_min_;
};

struct Optimum {
  Vector theta;
  double risk = 0.0;
};

/// One regression task: x ~ N(0, sigma_x), y = beta^T x + mu^T theta + w, w ~ N(0, noise_var).
struct LinRegTask {
  Matrix sigma_x;
  Vector beta;
  Vector mu;
  double noise_var = 1.0;
};

/// sum_i C_yy - 2 C_yx theta_i + theta_i^T C_xx theta_i, the expected squared
/// residual E (y - theta^T x)^2 summed over tasks (twice the expected loss).
double performative_risk_linear_regression(const Vector& theta, std::span<const LinRegTask> tasks);

/// theta_i = C_xx^{-1} C_xy per task; throws std::domain_error if C_xx is singular.
Optimum performative_optimum_linear_regression(std::span<const LinRegTask> tasks);

struct PortfolioParams {
  Vector zbar;
  Matrix a;
  double xi = 0.0;
};

/// -zbar^T theta - theta^T A theta + xi ||theta||^2.
double performative_risk_portfolio(const Vector& theta, const PortfolioParams& params);

/// sum theta <= budget, 0 <= theta <= cap, s^T theta <= spread_cap, theta^T Psi theta <= risk_cap.
struct PortfolioConstraints {
  double budget = 1.0;
  double cap = 0.3;
  Vector spread;
  double spread_cap = 2.0;
  Matrix risk_cov;
  double risk_cap = 0.01;

  FeasibleSet feasible_set() const;
  /// The three g constraints (budget, liquidity, risk); the box is Theta.
  QuadraticConstraintSet constraint_set() const;
  ConvexQuadraticProgram program(const PortfolioParams& params) const;
};

class NonConvexProblem : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

struct PortfolioOptimum {
  Vector theta;
  double risk = 0.0;
  Vector multipliers;
  double kkt_residual = 0.0;
};

/// Constrained minimizer of the portfolio risk. Refuses instances whose risk
/// Hessian 2 xi I - (A + A^T) has a negative eigenvalue.
PortfolioOptimum performative_optimum_portfolio(const PortfolioParams& params,
                                                const PortfolioConstraints& constraints);

}  // namespace perfpd
