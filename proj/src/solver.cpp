#include "perfpd/solver.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace perfpd {

std::string to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::Adaptive:
      return "adaptive";
    case Strategy::StablePoint:
      return "stable-point";
    case Strategy::KnownA:
      return "known-a";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "adaptive" || lower == "apda") return Strategy::Adaptive;
  if (lower == "stable-point" || lower == "pd-ps" || lower == "stable") return Strategy::StablePoint;
  if (lower == "known-a" || lower == "baseline") return Strategy::KnownA;
  throw ContractViolation("unknown strategy '" + std::string(name) + "'");
}

SolverConfig SolverConfig::theoretical(std::size_t horizon, double constraint_lipschitz, Index decision_dim,
                                       Strategy strategy) {
  require(horizon > 0, "theoretical schedule needs a positive horizon");
  SolverConfig config;
  config.horizon = horizon;
  config.eta = 1.0 / std::sqrt(static_cast<double>(horizon));
  config.delta = select_delta(config.eta, constraint_lipschitz);
  config.pool_size = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(horizon))));
  config.noise = NoiseSpec::standard_normal(decision_dim);
  config.zeta = StepSizeRule::theoretical(config.noise.kappa1, config.noise.kappa3);
  config.strategy = strategy;
  return config;
}

SolverConfig SolverConfig::experiment(std::size_t horizon, std::size_t pool_size, Index decision_dim,
                                      Strategy strategy) {
  SolverConfig config;
  config.horizon = horizon;
  config.eta = 5e-3;
  config.delta = 1.0;
  config.pool_size = pool_size;
  config.noise = NoiseSpec::standard_normal(decision_dim);
  config.zeta = StepSizeRule::shifted(10.0);
  config.strategy = strategy;
  return config;
}

void SolverConfig::validate(const Problem& problem) const {
  require(eta > 0.0, "eta must be positive");
  require(delta >= 0.0, "delta must be nonnegative");
  require(pool_mode == PoolMode::MomentMatched || pool_size > 0, "base pool must be nonempty");
  require(problem.loss != nullptr && problem.constraints != nullptr, "problem is incomplete");
  require_size(noise.dim, problem.loss->decision_dim(), "exploration noise");
  require_size(problem.constraints->decision_dim(), problem.loss->decision_dim(), "constraint decision");
  require_size(problem.feasible.dim(), problem.loss->decision_dim(), "feasible set");
  if (theta_init) require_size(theta_init->size(), problem.loss->decision_dim(), "initial decision");
}

Vector grad_pr_hat(Strategy strategy, const BaseSamplePool& pool, const Matrix& a_tilde, const LossSpec& loss,
                   const Vector& theta) {
  require(pool.size() > 0, "base pool is empty");
  const Index d = loss.decision_dim();
  const Index k = loss.data_dim();
  require_size(theta.size(), d, "decision");
  require_size(pool.dim(), k, "base pool");
  require_size(a_tilde.rows(), k, "performative estimate rows");
  require_size(a_tilde.cols(), d, "performative estimate cols");

  const Vector offset = a_tilde * theta;
  Vector grad_theta = Vector::Zero(d);
  Vector grad_z = Vector::Zero(k);
  Vector z(k);
  const Matrix& samples = pool.samples();
  for (Index i = 0; i < samples.cols(); ++i) {
    z = samples.col(i) + offset;
    loss.accumulate_gradients(theta, z, grad_theta, grad_z);
  }
  if (strategy != Strategy::StablePoint) grad_theta.noalias() += a_tilde.transpose() * grad_z;
  return grad_theta / static_cast<double>(pool.size());
}

Vector grad_lagrangian_primal(const Vector& grad_pr, const ConstraintSet& constraints, const Vector& theta,
                              const Vector& lambda) {
  require_size(lambda.size(), constraints.count(), "multipliers");
  require_size(grad_pr.size(), theta.size(), "risk gradient");
  if (constraints.count() == 0) return grad_pr;
  return grad_pr + constraints.jacobian_transpose_times(theta, lambda);
}

Vector grad_lagrangian_dual(const ConstraintSet& constraints, const Vector& theta, const Vector& lambda,
                            double delta, double eta) {
  require_size(lambda.size(), constraints.count(), "multipliers");
  return constraints.values(theta) - (delta * eta) * lambda;
}

std::pair<Vector, Vector> primal_dual_update(const Vector& theta, const Vector& lambda, const Vector& grad_pr,
                                             const Problem& problem, double eta, double delta) {
  const Vector primal = grad_lagrangian_primal(grad_pr, *problem.constraints, theta, lambda);
  const Vector dual = grad_lagrangian_dual(*problem.constraints, theta, lambda, delta, eta);
  Vector next_theta = problem.feasible.project(theta - eta * primal);
  Vector next_lambda = (lambda + eta * dual).cwiseMax(0.0);
  return {std::move(next_theta), std::move(next_lambda)};
}

DeltaInterval delta_interval(double eta, double constraint_lipschitz) {
  require(eta > 0.0, "eta must be positive");
  const double x = 32.0 * eta * eta * constraint_lipschitz * constraint_lipschitz;
  if (x > 1.0) {
    throw HorizonTooShort("no admissible delta: need 32 eta^2 L_g^2 <= 1, i.e. horizon T >= 32 L_g^2 = " +
                          std::to_string(32.0 * constraint_lipschitz * constraint_lipschitz));
  }
  const double root = std::sqrt(1.0 - x);
  const double denom = 4.0 * eta * eta;
  // Lower root in cancellation-free form: (1 - sqrt(1-x)) = x / (1 + sqrt(1-x)).
  return DeltaInterval{x / ((1.0 + root) * denom), (1.0 + root) / denom};
}

double select_delta(double eta, double constraint_lipschitz) {
  delta_interval(eta, constraint_lipschitz);
  // The interval is symmetric about 1/(4 eta^2).
  return 1.0 / (4.0 * eta * eta);
}

namespace {

Vector uniform_point(const FeasibleSet& set, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Index d = set.dim();
  if (set.kind() == FeasibleSet::Kind::Ball) {
    std::normal_distribution<double> normal;
    Vector dir(d);
    for (Index i = 0; i < d; ++i) dir[i] = normal(rng);
    const double norm = dir.norm();
    if (norm == 0.0) return Vector::Zero(d);
    const double r = set.radius() * std::pow(unit(rng), 1.0 / static_cast<double>(d));
    return dir * (r / norm);
  }
  Vector x(d);
  for (Index i = 0; i < d; ++i) x[i] = set.lower()[i] + unit(rng) * (set.upper()[i] - set.lower()[i]);
  return set.project(x);
}

BaseSamplePool make_pool(const SolverConfig& config, const LocationFamilyMap& map, Simulator& simulator) {
  if (config.pool_mode == PoolMode::MomentMatched) return BaseSamplePool::moment_matched(map.base());
  return BaseSamplePool::draw(simulator, config.pool_size);
}

}  // namespace

PrimalDualSolver::PrimalDualSolver(SolverConfig config, const Problem& problem, const LocationFamilyMap& map)
    : config_(std::move(config)),
      problem_(&problem),
      map_(&map),
      simulator_(map, make_rng(config_.seed, config_.replica, Stream::Observations)),
      exploration_(make_rng(config_.seed, config_.replica, Stream::Exploration)),
      pool_(make_pool(config_, map, simulator_)) {
  config_.validate(problem);
  require_size(map.decision_dim(), problem.loss->decision_dim(), "location family decision");
  require_size(map.data_dim(), problem.loss->data_dim(), "location family data");

  if (config_.theta_init) {
    state_.theta = problem.feasible.project(*config_.theta_init);
  } else {
    Rng init = make_rng(config_.seed, config_.replica, Stream::Initialization);
    state_.theta = problem.initializer ? problem.initializer(init) : uniform_point(problem.feasible, init);
  }
  state_.lambda = Vector::Zero(problem.constraints->count());
  state_.estimator = EstimatorState::zero(map.data_dim(), map.decision_dim());
  if (config_.strategy == Strategy::KnownA) state_.estimator.a_hat = map.performative_matrix();
  state_.t = 1;
}

void PrimalDualSolver::set_state(SolverState state) {
  require_size(state.theta.size(), problem_->loss->decision_dim(), "decision");
  require_size(state.lambda.size(), problem_->constraints->count(), "multipliers");
  state_ = std::move(state);
}

void PrimalDualSolver::step(IterationObserver* observer) {
  const Vector z = simulator_.observe(state_.theta);
  if (config_.strategy == Strategy::Adaptive) {
    const Vector u = config_.noise.draw(exploration_);
    const Vector z_perturbed = simulator_.observe(state_.theta + u);
    apply_update(state_.estimator, u, z, z_perturbed, config_.zeta);
  }

  const Matrix& a_tilde =
      config_.strategy == Strategy::Adaptive ? state_.estimator.a_hat : map_->performative_matrix();
  const Vector grad = grad_pr_hat(config_.strategy, pool_, a_tilde, *problem_->loss, state_.theta);

  if (observer != nullptr) {
    const Vector g = problem_->constraints->values(state_.theta);
    observer->on_iteration(IterationView{state_.t, state_.theta, state_.lambda, state_.estimator, g});
  }

  auto [theta, lambda] = primal_dual_update(state_.theta, state_.lambda, grad, *problem_, config_.eta, config_.delta);
  state_.theta = std::move(theta);
  state_.lambda = std::move(lambda);
  ++state_.t;
}

void PrimalDualSolver::run(IterationObserver* observer) {
  while (!finished()) step(observer);
}

}  // namespace perfpd
