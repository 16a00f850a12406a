#include "perfpd/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

namespace perfpd {

namespace {

Matrix standard_normal_matrix(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

// Random SPD matrix G G^T / d + I, rescaled to the requested trace.
Matrix random_spd(Index dim, double trace, Rng& rng) {
  const Matrix g = standard_normal_matrix(dim, dim, rng);
  Matrix s = g * g.transpose() / static_cast<double>(dim) + Matrix::Identity(dim, dim);
  s = 0.5 * (s + s.transpose());
  return s * (trace / s.trace());
}

Vector scaled_to_norm(Vector v, double norm) {
  const double current = v.norm();
  if (norm == 0.0 || current == 0.0) return Vector::Zero(v.size());
  return v * (norm / current);
}

}  // namespace

ExperimentInstance build_linreg(std::uint64_t seed, double epsilon, int nodes, double edge_prob, Index task_dim) {
  require(epsilon >= 0.0, "sensitivity epsilon must be nonnegative");
  require(nodes >= 1 && task_dim >= 1, "linear regression needs at least one node and one feature");
  require(edge_prob >= 0.0 && edge_prob <= 1.0, "edge probability must lie in [0, 1]");
  Rng rng = make_rng(seed, 0, Stream::Construction);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal;

  LinRegExperiment exp;
  exp.nodes = nodes;
  exp.edge_prob = edge_prob;
  exp.task_dim = task_dim;
  exp.epsilon = epsilon;
  for (int i = 0; i < nodes; ++i)
    for (int j = i + 1; j < nodes; ++j)
      if (unit(rng) < edge_prob) exp.edges.emplace_back(i, j);

  const Index d = task_dim;
  const Index n = nodes;
  Vector mu_all(n * d);
  for (Index i = 0; i < n * d; ++i) mu_all[i] = normal(rng);
  mu_all = scaled_to_norm(mu_all, epsilon);

  exp.tasks.resize(static_cast<std::size_t>(nodes));
  for (Index i = 0; i < n; ++i) {
    LinRegTask& task = exp.tasks[static_cast<std::size_t>(i)];
    task.sigma_x = random_spd(d, static_cast<double>(d), rng);
    task.beta.resize(d);
    for (Index j = 0; j < d; ++j) task.beta[j] = normal(rng);
    task.mu = mu_all.segment(i * d, d);
    task.noise_var = 1.0;
  }

  const Optimum po = performative_optimum_linear_regression(exp.tasks);

  std::uniform_real_distribution<double> slack_dist(0.0, 0.02);
  exp.slack.resize(static_cast<Index>(exp.edges.size()));
  Vector offsets(static_cast<Index>(exp.edges.size()));
  for (std::size_t e = 0; e < exp.edges.size(); ++e) {
    const double b = slack_dist(rng);
    const auto [i, j] = exp.edges[e];
    const double gap = (po.theta.segment(i * d, d) - po.theta.segment(j * d, d)).squaredNorm();
    exp.slack[static_cast<Index>(e)] = b;
    offsets[static_cast<Index>(e)] = 0.5 * (gap + b * b);
  }

  const double radius = std::max(1.0, 2.0 * po.theta.norm());
  const double m = static_cast<double>(exp.edges.size());
  ConstraintConstants k;
  k.lipschitz = std::sqrt(m) * 2.0 * radius;
  k.bound = std::sqrt(m) * std::max(radius * radius, offsets.size() > 0 ? offsets.maxCoeff() : 0.0);

  // Z stacks (x_i, y_i) per node; only the labels move with theta.
  const Index k_dim = n * (d + 1);
  Matrix cov = Matrix::Zero(k_dim, k_dim);
  Matrix a = Matrix::Zero(k_dim, n * d);
  for (Index i = 0; i < n; ++i) {
    const LinRegTask& task = exp.tasks[static_cast<std::size_t>(i)];
    const Vector c_xy = task.sigma_x * task.beta;
    const Index o = i * (d + 1);
    cov.block(o, o, d, d) = task.sigma_x;
    cov.block(o, o + d, d, 1) = c_xy;
    cov.block(o + d, o, 1, d) = c_xy.transpose();
    cov(o + d, o + d) = task.beta.dot(c_xy) + task.noise_var;
    a.block(o + d, i * d, 1, d) = task.mu.transpose();
  }

  Problem problem{std::make_shared<MultiTaskSquaredLoss>(n, d),
                  std::make_shared<ProximityConstraints>(n, d, exp.edges, offsets, k),
                  FeasibleSet::ball(n * d, radius), [dim = n * d](Rng&) { return Vector(Vector::Zero(dim)); }};
  auto tasks = exp.tasks;
  auto oracle = std::make_shared<RiskOracle>(
      [tasks](const Vector& theta) { return 0.5 * performative_risk_linear_regression(theta, tasks); }, po.theta,
      0.5 * po.risk);
  auto map = std::make_shared<LocationFamilyMap>(BaseDistribution::gaussian(Vector::Zero(k_dim), cov), a);
  return ExperimentInstance{"linreg", std::move(map), std::move(problem), std::move(oracle), std::move(exp)};
}

ExperimentInstance build_portfolio(std::uint64_t seed, double epsilon, Index assets, std::size_t psi_samples) {
  require(epsilon >= 0.0, "sensitivity epsilon must be nonnegative");
  require(assets >= 1, "portfolio needs at least one asset");
  require(psi_samples >= 2, "risk covariance needs at least two samples");
  Rng rng = make_rng(seed, 0, Stream::Construction);
  const Index l = assets;

  PortfolioExperiment exp;
  exp.assets = l;
  exp.epsilon = epsilon;

  std::uniform_real_distribution<double> ret(10.0 * epsilon, 1.0 + 10.0 * epsilon);
  Vector zbar(l);
  for (Index i = 0; i < l; ++i) zbar[i] = ret(rng);
  exp.params.zbar = scaled_to_norm(zbar, 2.0);
  exp.sigma_z = random_spd(l, 1.0 / static_cast<double>(l), rng);

  Matrix a = standard_normal_matrix(l, l, rng);
  const double top = largest_singular_value(a);
  exp.params.a = (epsilon == 0.0 || top == 0.0) ? Matrix(Matrix::Zero(l, l)) : Matrix(a * (epsilon / top));
  exp.params.xi = epsilon;

  std::uniform_real_distribution<double> spread(2.0, 4.0);
  exp.constraints.spread.resize(l);
  for (Index i = 0; i < l; ++i) exp.constraints.spread[i] = spread(rng);

  auto map = std::make_shared<LocationFamilyMap>(BaseDistribution::gaussian(exp.params.zbar, exp.sigma_z),
                                                 exp.params.a);
  Matrix draws(l, static_cast<Index>(psi_samples));
  for (Index j = 0; j < draws.cols(); ++j) map->base().draw(rng, draws.col(j));
  const Vector mean = draws.rowwise().mean();
  const Matrix centered = draws.colwise() - mean;
  const Matrix psi = centered * centered.transpose() / static_cast<double>(psi_samples - 1);
  exp.constraints.risk_cov = 0.5 * (psi + psi.transpose());

  const PortfolioOptimum po = performative_optimum_portfolio(exp.params, exp.constraints);

  auto constraints = std::make_shared<QuadraticConstraintSet>(exp.constraints.constraint_set());
  const double cap = exp.constraints.cap;
  auto initializer = [constraints, l, cap](Rng& init) {
    std::uniform_real_distribution<double> unit(0.0, cap);
    Vector theta(l);
    for (Index i = 0; i < l; ++i) theta[i] = unit(init);
    for (int halvings = 0; halvings < 200 && constraints->values(theta).maxCoeff() > 0.0; ++halvings) theta *= 0.5;
    return theta;
  };
  Problem problem{std::make_shared<PortfolioLoss>(l, epsilon), constraints, exp.constraints.feasible_set(),
                  initializer};
  const PortfolioParams params = exp.params;
  auto oracle = std::make_shared<RiskOracle>(
      [params](const Vector& theta) { return performative_risk_portfolio(theta, params); }, po.theta, po.risk);
  return ExperimentInstance{"portfolio", std::move(map), std::move(problem), std::move(oracle), std::move(exp)};
}

const StrategyResult& ComparisonResult::at(Strategy strategy) const {
  for (const auto& s : strategies)
    if (s.strategy == strategy) return s;
  throw ContractViolation("strategy '" + to_string(strategy) + "' was not run");
}

SolverConfig replica_config(const ComparisonConfig& config, const ExperimentInstance& experiment, Strategy strategy,
                            std::size_t replica) {
  SolverConfig sc;
  sc.horizon = config.horizon;
  sc.eta = config.eta;
  sc.delta = config.delta;
  sc.pool_size = config.pool_size;
  sc.noise = NoiseSpec::standard_normal(experiment.map->decision_dim());
  sc.zeta = config.zeta;
  sc.strategy = strategy;
  sc.seed = config.seed;
  sc.replica = replica;
  sc.pool_mode = config.pool_mode;
  return sc;
}

std::pair<std::vector<TrajectoryRecord>, RunSummary> run_replica(const ExperimentInstance& experiment,
                                                                 const SolverConfig& config, std::size_t stride) {
  PrimalDualSolver solver(config, experiment.problem, *experiment.map);
  MetricsRecorder recorder(*experiment.oracle, experiment.map->performative_matrix(), config.horizon, stride);
  solver.run(&recorder);
  RunSummary summary = recorder.summary();
  summary.queries = solver.queries();
  return {recorder.records(), std::move(summary)};
}

ComparisonResult run_comparison(const ExperimentInstance& experiment, const ComparisonConfig& config) {
  require(!config.strategies.empty(), "strategy list is empty");
  require(config.replicas >= 1, "at least one replica is required");
  require(config.stride >= 1, "record stride must be at least 1");

  unsigned threads = config.threads != 0 ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, config.replicas));

  ComparisonResult result;
  for (Strategy strategy : config.strategies) {
    StrategyResult sr;
    sr.strategy = strategy;
    TrajectoryAverager averager;
    Vector violation_sum;
    KahanSum regret_sum, dec_sum, err_sum;
    std::size_t queries = 0;

    for (std::size_t first = 0; first < config.replicas; first += threads) {
      const std::size_t count = std::min<std::size_t>(threads, config.replicas - first);
      std::vector<std::pair<std::vector<TrajectoryRecord>, RunSummary>> slots(count);
      std::vector<std::exception_ptr> errors(count);
      auto job = [&](std::size_t slot) {
        try {
          slots[slot] = run_replica(experiment, replica_config(config, experiment, strategy, first + slot),
                                    config.stride);
        } catch (...) {
          errors[slot] = std::current_exception();
        }
      };
      if (count == 1) {
        job(0);
      } else {
        std::vector<std::thread> pool;
        for (std::size_t s = 0; s < count; ++s) pool.emplace_back(job, s);
        for (auto& th : pool) th.join();
      }
      for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

      for (auto& [records, summary] : slots) {
        averager.add(records);
        if (violation_sum.size() == 0) violation_sum = Vector::Zero(summary.violation.size());
        violation_sum += summary.violation;
        regret_sum.add(summary.regret);
        dec_sum.add(summary.final_dec_dev);
        err_sum.add(summary.final_param_err);
        queries += summary.queries;
        sr.replicas.push_back(std::move(summary));
      }
    }

    const double scale = 1.0 / static_cast<double>(config.replicas);
    sr.mean = averager.mean();
    sr.mean_summary.horizon = config.horizon;
    sr.mean_summary.regret = regret_sum.value() * scale;
    sr.mean_summary.violation = violation_sum * scale;
    sr.mean_summary.final_dec_dev = dec_sum.value() * scale;
    sr.mean_summary.final_param_err = err_sum.value() * scale;
    sr.mean_summary.queries = queries / config.replicas;
    result.strategies.push_back(std::move(sr));
  }
  return result;
}

}  // namespace perfpd
