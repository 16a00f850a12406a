#include "perfpd/problem.hpp"

#include <algorithm>
#include <cmath>

namespace perfpd {

namespace {

double spectral_norm_symmetric(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

double min_eigenvalue(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

}  // namespace

Vector LossSpec::grad_theta(const Vector& theta, const Vector& z) const {
  Vector gt = Vector::Zero(decision_dim());
  Vector gz = Vector::Zero(data_dim());
  accumulate_gradients(theta, z, gt, gz);
  return gt;
}

Vector LossSpec::grad_z(const Vector& theta, const Vector& z) const {
  Vector gt = Vector::Zero(decision_dim());
  Vector gz = Vector::Zero(data_dim());
  accumulate_gradients(theta, z, gt, gz);
  return gz;
}

// --- QuadraticLoss -----------------------------------------------------------

QuadraticLoss::QuadraticLoss(Matrix q_tt, Matrix m_tz, Matrix p_zz, Vector q_t, Vector p_z,
                             double theta_radius, double data_radius)
    : q_tt_(std::move(q_tt)), m_tz_(std::move(m_tz)), p_zz_(std::move(p_zz)), q_t_(std::move(q_t)),
      p_z_(std::move(p_z)) {
  const Index d = q_tt_.rows();
  const Index k = p_zz_.rows();
  require_size(q_tt_.cols(), d, "quadratic loss Q");
  require_size(p_zz_.cols(), k, "quadratic loss P");
  require_size(m_tz_.rows(), d, "quadratic loss M rows");
  require_size(m_tz_.cols(), k, "quadratic loss M cols");
  require_size(q_t_.size(), d, "quadratic loss q");
  require_size(p_z_.size(), k, "quadratic loss p");

  Matrix stacked(d + k, k);
  stacked << m_tz_, p_zz_;
  const double m_norm = largest_singular_value(m_tz_);
  constants_.smoothness = largest_singular_value(stacked);
  constants_.convexity_theta = min_eigenvalue(q_tt_);
  constants_.convexity_z = min_eigenvalue(p_zz_);
  constants_.lipschitz_theta = spectral_norm_symmetric(q_tt_) * theta_radius + m_norm * data_radius + q_t_.norm();
  constants_.lipschitz_z = m_norm * theta_radius + spectral_norm_symmetric(p_zz_) * data_radius + p_z_.norm();
}

double QuadraticLoss::value(const Vector& theta, const Vector& z) const {
  return 0.5 * theta.dot(q_tt_ * theta) + theta.dot(m_tz_ * z) + 0.5 * z.dot(p_zz_ * z) + q_t_.dot(theta) +
         p_z_.dot(z);
}

void QuadraticLoss::accumulate_gradients(const Vector& theta, const Vector& z, Eigen::Ref<Vector> grad_theta,
                                         Eigen::Ref<Vector> grad_z) const {
  grad_theta.noalias() += q_tt_ * theta;
  grad_theta.noalias() += m_tz_ * z;
  grad_theta += q_t_;
  grad_z.noalias() += m_tz_.transpose() * theta;
  grad_z.noalias() += p_zz_ * z;
  grad_z += p_z_;
}

// --- MultiTaskSquaredLoss ----------------------------------------------------

MultiTaskSquaredLoss::MultiTaskSquaredLoss(Index tasks, Index task_dim) : tasks_(tasks), task_dim_(task_dim) {
  require(tasks > 0 && task_dim > 0, "multi-task loss needs positive sizes");
}

double MultiTaskSquaredLoss::value(const Vector& theta, const Vector& z) const {
  double v = 0.0;
  const Index stride = task_dim_ + 1;
  for (Index i = 0; i < tasks_; ++i) {
    const double r = z[i * stride + task_dim_] - theta.segment(i * task_dim_, task_dim_).dot(z.segment(i * stride, task_dim_));
    v += 0.5 * r * r;
  }
  return v;
}

void MultiTaskSquaredLoss::accumulate_gradients(const Vector& theta, const Vector& z, Eigen::Ref<Vector> grad_theta,
                                                Eigen::Ref<Vector> grad_z) const {
  const Index stride = task_dim_ + 1;
  for (Index i = 0; i < tasks_; ++i) {
    const auto x = z.segment(i * stride, task_dim_);
    const auto th = theta.segment(i * task_dim_, task_dim_);
    const double r = z[i * stride + task_dim_] - th.dot(x);
    grad_theta.segment(i * task_dim_, task_dim_) -= r * x;
    grad_z.segment(i * stride, task_dim_) -= r * th;
    grad_z[i * stride + task_dim_] += r;
  }
}

// --- PortfolioLoss -----------------------------------------------------------

PortfolioLoss::PortfolioLoss(Index assets, double xi) : assets_(assets), xi_(xi) {
  require(assets > 0, "portfolio needs at least one asset");
}

double PortfolioLoss::value(const Vector& theta, const Vector& z) const {
  return -z.dot(theta) + xi_ * theta.squaredNorm();
}

void PortfolioLoss::accumulate_gradients(const Vector& theta, const Vector& z, Eigen::Ref<Vector> grad_theta,
                                         Eigen::Ref<Vector> grad_z) const {
  grad_theta += 2.0 * xi_ * theta - z;
  grad_z -= theta;
}

// --- Constraints -------------------------------------------------------------

Vector ConstraintSet::jacobian_transpose_times(const Vector& theta, const Vector& lambda) const {
  return jacobian(theta).transpose() * lambda;
}

QuadraticConstraintSet::QuadraticConstraintSet(Index decision_dim, std::vector<QuadraticConstraint> constraints,
                                               ConstraintConstants constants)
    : dim_(decision_dim), constraints_(std::move(constraints)), constants_(constants) {
  for (const auto& c : constraints_) {
    require_size(c.q.size(), dim_, "constraint linear term");
    if (c.p.size() != 0) {
      require_size(c.p.rows(), dim_, "constraint quadratic term");
      require_size(c.p.cols(), dim_, "constraint quadratic term");
    }
  }
}

Vector QuadraticConstraintSet::values(const Vector& theta) const {
  require_size(theta.size(), dim_, "decision");
  Vector g(count());
  for (Index i = 0; i < count(); ++i) g[i] = constraints_[static_cast<std::size_t>(i)].value(theta);
  return g;
}

Matrix QuadraticConstraintSet::jacobian(const Vector& theta) const {
  require_size(theta.size(), dim_, "decision");
  Matrix j(count(), dim_);
  for (Index i = 0; i < count(); ++i) j.row(i) = constraints_[static_cast<std::size_t>(i)].gradient(theta).transpose();
  return j;
}

ProximityConstraints::ProximityConstraints(Index tasks, Index task_dim, std::vector<std::pair<int, int>> edges,
                                           Vector offsets, ConstraintConstants constants)
    : tasks_(tasks), task_dim_(task_dim), edges_(std::move(edges)), offsets_(std::move(offsets)),
      constants_(constants) {
  require_size(offsets_.size(), static_cast<Index>(edges_.size()), "proximity offsets");
  for (const auto& [i, j] : edges_) {
    require(i >= 0 && j >= 0 && i < tasks_ && j < tasks_ && i != j, "proximity edge out of range");
  }
}

Vector ProximityConstraints::values(const Vector& theta) const {
  require_size(theta.size(), decision_dim(), "decision");
  Vector g(count());
  for (Index e = 0; e < count(); ++e) {
    const auto [i, j] = edges_[static_cast<std::size_t>(e)];
    g[e] = 0.5 * (theta.segment(i * task_dim_, task_dim_) - theta.segment(j * task_dim_, task_dim_)).squaredNorm() -
           offsets_[e];
  }
  return g;
}

Matrix ProximityConstraints::jacobian(const Vector& theta) const {
  require_size(theta.size(), decision_dim(), "decision");
  Matrix jac = Matrix::Zero(count(), decision_dim());
  for (Index e = 0; e < count(); ++e) {
    const auto [i, j] = edges_[static_cast<std::size_t>(e)];
    const Vector diff = theta.segment(i * task_dim_, task_dim_) - theta.segment(j * task_dim_, task_dim_);
    jac.row(e).segment(i * task_dim_, task_dim_) = diff.transpose();
    jac.row(e).segment(j * task_dim_, task_dim_) = -diff.transpose();
  }
  return jac;
}

Vector ProximityConstraints::jacobian_transpose_times(const Vector& theta, const Vector& lambda) const {
  require_size(theta.size(), decision_dim(), "decision");
  require_size(lambda.size(), count(), "multipliers");
  Vector out = Vector::Zero(decision_dim());
  for (Index e = 0; e < count(); ++e) {
    if (lambda[e] == 0.0) continue;
    const auto [i, j] = edges_[static_cast<std::size_t>(e)];
    const Vector diff = theta.segment(i * task_dim_, task_dim_) - theta.segment(j * task_dim_, task_dim_);
    out.segment(i * task_dim_, task_dim_) += lambda[e] * diff;
    out.segment(j * task_dim_, task_dim_) -= lambda[e] * diff;
  }
  return out;
}

// --- FeasibleSet -------------------------------------------------------------

FeasibleSet::FeasibleSet(Kind kind, Index dim, double radius, Vector lower, Vector upper)
    : kind_(kind), dim_(dim), radius_(radius), lower_(std::move(lower)), upper_(std::move(upper)) {}

FeasibleSet FeasibleSet::ball(Index dim, double radius) {
  require(radius >= 0.0, "ball radius must be nonnegative");
  return FeasibleSet(Kind::Ball, dim, radius, Vector(), Vector());
}

FeasibleSet FeasibleSet::box(Vector lower, Vector upper) {
  require_size(upper.size(), lower.size(), "box bounds");
  require((lower.array() <= upper.array()).all(), "box is empty");
  const Index dim = lower.size();
  return FeasibleSet(Kind::Box, dim, 0.0, std::move(lower), std::move(upper));
}

FeasibleSet FeasibleSet::ball_box(double radius, Vector lower, Vector upper) {
  require_size(upper.size(), lower.size(), "box bounds");
  require((lower.array() <= upper.array()).all(), "box is empty");
  require(radius >= 0.0, "ball radius must be nonnegative");
  // The intersection is nonempty iff the box point closest to the origin is in the ball.
  require(Vector::Zero(lower.size()).cwiseMax(lower).cwiseMin(upper).norm() <= radius,
          "ball and box do not intersect");
  const Index dim = lower.size();
  return FeasibleSet(Kind::BallBox, dim, radius, std::move(lower), std::move(upper));
}

double FeasibleSet::radius() const {
  switch (kind_) {
    case Kind::Ball:
      return radius_;
    case Kind::Box:
      return lower_.cwiseAbs().cwiseMax(upper_.cwiseAbs()).norm();
    case Kind::BallBox:
      return std::min(radius_, lower_.cwiseAbs().cwiseMax(upper_.cwiseAbs()).norm());
  }
  return radius_;
}

Vector FeasibleSet::project_ball(const Vector& y) const {
  const double norm = y.norm();
  if (norm <= radius_) return y;
  return y * (radius_ / norm);
}

Vector FeasibleSet::project_box(const Vector& y) const { return y.cwiseMax(lower_).cwiseMin(upper_); }

Vector FeasibleSet::project(const Vector& y) const {
  require_size(y.size(), dim_, "projection input");
  switch (kind_) {
    case Kind::Ball:
      return project_ball(y);
    case Kind::Box:
      return project_box(y);
    case Kind::BallBox: {
      // x = clip(y / (1 + mu)) with mu >= 0 the smallest multiplier that lands in the ball.
      Vector x = project_box(y);
      if (x.norm() <= radius_) return x;
      const auto at = [&](double mu) { return project_box(y / (1.0 + mu)); };
      double lo = 0.0, hi = 1.0;
      while (at(hi).norm() > radius_ && hi < 1e300) hi *= 2.0;
      for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        (at(mid).norm() > radius_ ? lo : hi) = mid;
      }
      x = at(hi);
      return x.norm() <= radius_ ? x : project_ball(x);
    }
  }
  return y;
}

bool FeasibleSet::contains(const Vector& x, double tolerance) const {
  if (x.size() != dim_) return false;
  const bool in_ball = x.norm() <= radius_ + tolerance;
  const auto in_box = [&] {
    return ((x - lower_).array() >= -tolerance).all() && ((upper_ - x).array() >= -tolerance).all();
  };
  switch (kind_) {
    case Kind::Ball:
      return in_ball;
    case Kind::Box:
      return in_box();
    case Kind::BallBox:
      return in_ball && in_box();
  }
  return false;
}

// --- Linear regression closed forms -------------------------------------------

double performative_risk_linear_regression(const Vector& theta, std::span<const LinRegTask> tasks) {
  require(!tasks.empty(), "linear regression needs at least one task");
  const Index d = tasks.front().beta.size();
  require_size(theta.size(), d * static_cast<Index>(tasks.size()), "stacked decision");
  double risk = 0.0;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const LinRegTask& task = tasks[i];
    require_size(task.sigma_x.rows(), d, "task covariance");
    require_size(task.mu.size(), d, "task shift");
    const auto th = theta.segment(static_cast<Index>(i) * d, d);
    const Vector c_xy = task.sigma_x * task.beta;
    const double c_yy = task.beta.dot(c_xy) + task.noise_var;
    const double mu_th = task.mu.dot(th);
    risk += c_yy - 2.0 * c_xy.dot(th) + th.dot(task.sigma_x * th) + mu_th * mu_th;
  }
  return risk;
}

Optimum performative_optimum_linear_regression(std::span<const LinRegTask> tasks) {
  require(!tasks.empty(), "linear regression needs at least one task");
  const Index d = tasks.front().beta.size();
  Optimum out;
  out.theta.resize(d * static_cast<Index>(tasks.size()));
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const LinRegTask& task = tasks[i];
    const Matrix c_xx = task.sigma_x + task.mu * task.mu.transpose();
    Eigen::LDLT<Matrix> ldlt(c_xx);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() <= 1e-14 * std::max(1.0, ldlt.vectorD().maxCoeff())) {
      throw std::domain_error("singular feature second-moment matrix in task " + std::to_string(i));
    }
    out.theta.segment(static_cast<Index>(i) * d, d) = ldlt.solve(task.sigma_x * task.beta);
  }
  out.risk = performative_risk_linear_regression(out.theta, tasks);
  return out;
}

// --- Portfolio -----------------------------------------------------------------

double performative_risk_portfolio(const Vector& theta, const PortfolioParams& params) {
  require_size(theta.size(), params.zbar.size(), "portfolio decision");
  require_size(params.a.rows(), params.zbar.size(), "portfolio performative matrix");
  require_size(params.a.cols(), params.zbar.size(), "portfolio performative matrix");
  return -params.zbar.dot(theta) - theta.dot(params.a * theta) + params.xi * theta.squaredNorm();
}

FeasibleSet PortfolioConstraints::feasible_set() const {
  const Index l = spread.size();
  return FeasibleSet::box(Vector::Zero(l), Vector::Constant(l, cap));
}

QuadraticConstraintSet PortfolioConstraints::constraint_set() const {
  const Index l = spread.size();
  require_size(risk_cov.rows(), l, "risk covariance");
  require_size(risk_cov.cols(), l, "risk covariance");
  std::vector<QuadraticConstraint> list;
  list.push_back({Matrix(), Vector::Ones(l), -budget});
  list.push_back({Matrix(), spread, -spread_cap});
  list.push_back({2.0 * risk_cov, Vector::Zero(l), -risk_cap});

  const double r = feasible_set().radius();
  const double psi = spectral_norm_symmetric(risk_cov);
  ConstraintConstants k;
  k.lipschitz = std::sqrt(static_cast<double>(l) + spread.squaredNorm() + std::pow(2.0 * psi * r, 2));
  const Eigen::Vector3d bounds(std::sqrt(static_cast<double>(l)) * r + budget, spread.norm() * r + spread_cap,
                               psi * r * r + risk_cap);
  k.bound = bounds.norm();
  return QuadraticConstraintSet(l, std::move(list), k);
}

ConvexQuadraticProgram PortfolioConstraints::program(const PortfolioParams& params) const {
  const Index l = spread.size();
  require_size(params.zbar.size(), l, "portfolio return vector");
  ConvexQuadraticProgram qp;
  qp.h = 2.0 * params.xi * Matrix::Identity(l, l) - (params.a + params.a.transpose());
  qp.c = -params.zbar;
  qp.lower = Vector::Zero(l);
  qp.upper = Vector::Constant(l, cap);
  qp.constraints = constraint_set().constraints();
  return qp;
}

PortfolioOptimum performative_optimum_portfolio(const PortfolioParams& params,
                                                const PortfolioConstraints& constraints) {
  const ConvexQuadraticProgram qp = constraints.program(params);
  const double curvature = min_eigenvalue(qp.h);
  if (curvature < -1e-12 * std::max(1.0, spectral_norm_symmetric(qp.h))) {
    throw NonConvexProblem("portfolio risk is not convex: min eigenvalue of 2 xi I - (A + A^T) is " +
                           std::to_string(curvature));
  }
  QpOptions options;
  options.tolerance = 1e-10;
  const QpSolution sol = solve_augmented_lagrangian(qp, options);
  PortfolioOptimum out;
  out.theta = sol.x;
  out.risk = performative_risk_portfolio(sol.x, params);
  out.multipliers = sol.multipliers;
  out.kkt_residual = sol.kkt_residual;
  return out;
}

}  // namespace perfpd
