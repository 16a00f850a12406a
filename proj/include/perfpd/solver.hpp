#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "perfpd/common.hpp"
#include "perfpd/distmap.hpp"
#include "perfpd/estimator.hpp"
#include "perfpd/problem.hpp"

namespace perfpd {

/// How the performative gradient is approximated.
///  - Adaptive (APDA): both terms, with the online estimate A_hat.
///  - StablePoint (PD-PS): only the first term, on data observed at theta.
///  - KnownA (baseline): both terms, with the true A.
enum class Strategy { Adaptive, StablePoint, KnownA };

std::string to_string(Strategy strategy);
/// Accepts "adaptive"/"apda", "stable-point"/"pd-ps", "known-a"/"baseline".
Strategy parse_strategy(std::string_view name);

/// A constrained performative problem as seen by the solver.
struct Problem {
  std::shared_ptr<const LossSpec> loss;
  std::shared_ptr<const ConstraintSet> constraints;
  FeasibleSet feasible;
  /// Draws theta_1 when the config does not fix it; defaults to a uniform
  /// point of the feasible set.
  std::function<Vector(Rng&)> initializer;
};

enum class PoolMode { Sampled, MomentMatched };

struct SolverConfig {
  std::size_t horizon = 0;
  double eta = 5e-3;
  double delta = 1.0;
  std::size_t pool_size = 0;
  NoiseSpec noise;
  StepSizeRule zeta = StepSizeRule::shifted(10.0);
  Strategy strategy = Strategy::Adaptive;
  std::uint64_t seed = 0;
  std::uint64_t replica = 0;
  PoolMode pool_mode = PoolMode::Sampled;
  std::optional<Vector> theta_init;

  /// eta = 1/sqrt(T), delta = midpoint of the admissible interval,
  /// zeta_t = 2/(kappa1 t + 2 kappa3), n = ceil(sqrt(T)).
  static SolverConfig theoretical(std::size_t horizon, double constraint_lipschitz, Index decision_dim,
                                  Strategy strategy);

  /// Fixed eta = 5e-3, delta = 1, zeta_t = 1/(t + 10).
  static SolverConfig experiment(std::size_t horizon, std::size_t pool_size, Index decision_dim, Strategy strategy);

  void validate(const Problem& problem) const;
};

struct SolverState {
  Vector theta;
  Vector lambda;
  EstimatorState estimator;
  std::size_t t = 1;
};

/// What the solver exposes to recorders at iteration t, before the update.
struct IterationView {
  std::size_t t;
  const Vector& theta;
  const Vector& lambda;
  const EstimatorState& estimator;
  const Vector& constraint_values;
};

class IterationObserver {
public:
  virtual ~IterationObserver() = default;
  virtual void on_iteration(const IterationView& view) = 0;
};

/// Pool-averaged approximation of grad PR(theta). `a_tilde` shifts the pool:
/// A_hat for Adaptive, A for KnownA, and the observed-data shift (the true A)
/// for StablePoint, which drops the A^T grad_Z term.
Vector grad_pr_hat(Strategy strategy, const BaseSamplePool& pool, const Matrix& a_tilde, const LossSpec& loss,
                   const Vector& theta);

/// grad_pr + J(theta)^T lambda.
Vector grad_lagrangian_primal(const Vector& grad_pr, const ConstraintSet& constraints, const Vector& theta,
                              const Vector& lambda);

/// g(theta) - delta eta lambda.
Vector grad_lagrangian_dual(const ConstraintSet& constraints, const Vector& theta, const Vector& lambda,
                            double delta, double eta);

/// One alternating update: theta' = Proj(theta - eta grad_L), lambda' = [lambda + eta (g(theta) - delta eta lambda)]^+.
/// Both use the pre-update theta.
std::pair<Vector, Vector> primal_dual_update(const Vector& theta, const Vector& lambda, const Vector& grad_pr,
                                             const Problem& problem, double eta, double delta);

class HorizonTooShort : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

struct DeltaInterval {
  double lower;
  double upper;
};

/// Interval of delta with 2 delta^2 eta^2 - delta + 4 L_g^2 <= 0.
/// Throws HorizonTooShort when 1 - 32 eta^2 L_g^2 < 0 (T < 32 L_g^2 for eta = 1/sqrt(T)).
DeltaInterval delta_interval(double eta, double constraint_lipschitz);

/// Midpoint of delta_interval.
double select_delta(double eta, double constraint_lipschitz);

/// Algorithm 1 loop. Construction draws the base pool and initializes
/// (theta_1, lambda_1 = 0, A_hat = 0); run() performs the remaining steps.
class PrimalDualSolver {
public:
  PrimalDualSolver(SolverConfig config, const Problem& problem, const LocationFamilyMap& map);

  void step(IterationObserver* observer = nullptr);
  void run(IterationObserver* observer = nullptr);

  const SolverState& state() const { return state_; }
  void set_state(SolverState state);
  const BaseSamplePool& pool() const { return pool_; }
  const SolverConfig& config() const { return config_; }
  std::size_t queries() const { return simulator_.queries(); }
  bool finished() const { return state_.t > config_.horizon; }

private:
  SolverConfig config_;
  const Problem* problem_;
  const LocationFamilyMap* map_;
  Simulator simulator_;
  Rng exploration_;
  BaseSamplePool pool_;
  SolverState state_;
};

}  // namespace perfpd
