#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "perfpd/common.hpp"
#include "perfpd/distmap.hpp"
#include "perfpd/metrics.hpp"
#include "perfpd/problem.hpp"
#include "perfpd/solver.hpp"

namespace perfpd {

/// Multi-task regression on a random graph. Node i observes (x_i, y_i) with
/// y_i = beta_i^T x_i + mu_i^T theta_i + w_i.
struct LinRegExperiment {
  int nodes = 10;
  double edge_prob = 0.5;
  Index task_dim = 3;
  double epsilon = 0.0;
  std::vector<std::pair<int, int>> edges;  // i < j, each edge once
  std::vector<LinRegTask> tasks;
  Vector slack;  // b'_ij, one per edge
};

struct PortfolioExperiment {
  Index assets = 10;
  double epsilon = 0.0;
  PortfolioParams params;  // zbar, A, xi = epsilon
  Matrix sigma_z;
  PortfolioConstraints constraints;
};

/// Everything a run needs: the distribution map, the problem seen by the
/// solver, and the closed-form oracle used only for evaluation.
struct ExperimentInstance {
  std::string name;
  std::shared_ptr<const LocationFamilyMap> map;
  Problem problem;
  std::shared_ptr<const RiskOracle> oracle;
  std::variant<LinRegExperiment, PortfolioExperiment> details;
};

ExperimentInstance build_linreg(std::uint64_t seed, double epsilon, int nodes = 10, double edge_prob = 0.5,
                                Index task_dim = 3);

/// `psi_samples` base draws are taken to estimate the risk covariance Psi.
ExperimentInstance build_portfolio(std::uint64_t seed, double epsilon, Index assets = 10,
                                   std::size_t psi_samples = 1000);

struct ComparisonConfig {
  std::vector<Strategy> strategies{Strategy::Adaptive, Strategy::StablePoint, Strategy::KnownA};
  std::size_t horizon = 100000;
  std::size_t pool_size = 320;
  std::size_t replicas = 20;
  std::uint64_t seed = 0;
  double eta = 5e-3;
  double delta = 1.0;
  StepSizeRule zeta = StepSizeRule::shifted(10.0);
  std::size_t stride = 1;
  PoolMode pool_mode = PoolMode::Sampled;
  unsigned threads = 0;  // 0: hardware concurrency
};

struct StrategyResult {
  Strategy strategy = Strategy::Adaptive;
  std::vector<TrajectoryRecord> mean;  // pointwise over replicas
  RunSummary mean_summary;
  std::vector<RunSummary> replicas;
};

struct ComparisonResult {
  std::vector<StrategyResult> strategies;
  const StrategyResult& at(Strategy strategy) const;
};

/// Solver configuration for one replica of `config`.
SolverConfig replica_config(const ComparisonConfig& config, const ExperimentInstance& experiment, Strategy strategy,
                            std::size_t replica);

/// Runs every strategy over the same replica seeds. Replicas execute
/// concurrently; averages are reduced in replica order, so results do not
/// depend on the thread count.
ComparisonResult run_comparison(const ExperimentInstance& experiment, const ComparisonConfig& config);

/// A single seeded replica with its full trajectory.
std::pair<std::vector<TrajectoryRecord>, RunSummary> run_replica(const ExperimentInstance& experiment,
                                                                 const SolverConfig& config, std::size_t stride);

}  // namespace perfpd
