#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "perfpd/common.hpp"
#include "perfpd/problem.hpp"
#include "perfpd/solver.hpp"

namespace perfpd {

/// One row of a trajectory. Ratios use the first iterate as reference, so
/// regret_rel(1) = 1 and |vio_rel(1)| = 1.
struct TrajectoryRecord {
  std::size_t t = 0;
  double pr = 0.0;
  double regret_rel = 0.0;
  double vio_rel = 0.0;
  double dec_dev = 0.0;
  double param_err = 0.0;
  Vector g;
};

/// Cumulative quantities at the end of a run.
struct RunSummary {
  std::size_t horizon = 0;
  double regret = 0.0;  // Reg(T)
  Vector violation;     // Vio_i(T)
  double final_dec_dev = 0.0;
  double final_param_err = 0.0;
  std::size_t queries = 0;
};

/// Accumulates Reg(t) and Vio_i(t) at every iteration and keeps a strided
/// subset of rows: t = 1, multiples of the stride, and the horizon.
class MetricsRecorder final : public IterationObserver {
public:
  MetricsRecorder(const RiskOracle& oracle, Matrix a_true, std::size_t horizon, std::size_t stride = 1);

  void on_iteration(const IterationView& view) override;

  const std::vector<TrajectoryRecord>& records() const { return records_; }
  /// Iterations observed so far become the summary horizon.
  RunSummary summary() const;

private:
  const RiskOracle* oracle_;
  Matrix a_true_;
  std::size_t horizon_;
  std::size_t stride_;
  std::size_t seen_ = 0;
  KahanSum regret_;
  std::vector<KahanSum> violation_;
  double regret_first_ = 0.0;
  double vio_first_ = 0.0;
  double last_dec_dev_ = 0.0;
  double last_param_err_ = 0.0;
  std::vector<TrajectoryRecord> records_;
};

/// Record stride used when none is given: 1 up to 1e5 iterations, then 10.
std::size_t default_stride(std::size_t horizon);

/// Mean of `field` over recorded rows with tau in ((1 - fraction) t, t].
double trailing_mean(const std::vector<TrajectoryRecord>& records, std::size_t t,
                     const std::function<double(const TrajectoryRecord&)>& field, double fraction = 0.1);

/// Pointwise mean of equally shaped trajectories, summed in the order added.
class TrajectoryAverager {
public:
  void add(const std::vector<TrajectoryRecord>& run);
  std::size_t count() const { return count_; }
  std::vector<TrajectoryRecord> mean() const;

private:
  std::vector<TrajectoryRecord> sum_;
  std::size_t count_ = 0;
};

}  // namespace perfpd
