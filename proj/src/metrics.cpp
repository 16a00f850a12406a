#include "perfpd/metrics.hpp"

#include <cmath>

namespace perfpd {

MetricsRecorder::MetricsRecorder(const RiskOracle& oracle, Matrix a_true, std::size_t horizon, std::size_t stride)
    : oracle_(&oracle), a_true_(std::move(a_true)), horizon_(horizon), stride_(stride) {
  require(stride_ >= 1, "record stride must be at least 1");
}

void MetricsRecorder::on_iteration(const IterationView& view) {
  ++seen_;
  if (violation_.empty()) violation_.resize(static_cast<std::size_t>(view.constraint_values.size()));
  require_size(view.constraint_values.size(), static_cast<Index>(violation_.size()), "constraint values");

  const double pr = oracle_->pr(view.theta);
  const double excess = pr - oracle_->pr_min();
  regret_.add(excess);
  for (std::size_t i = 0; i < violation_.size(); ++i) violation_[i].add(view.constraint_values[static_cast<Index>(i)]);

  if (view.t == 1) {
    regret_first_ = excess;
    vio_first_ = violation_.empty() ? 0.0 : std::abs(view.constraint_values[view.constraint_values.size() - 1]);
  }
  last_dec_dev_ = (view.theta - oracle_->theta_po()).squaredNorm();
  last_param_err_ = (view.estimator.a_hat - a_true_).squaredNorm();

  if (view.t != 1 && view.t % stride_ != 0 && view.t != horizon_) return;

  const double t = static_cast<double>(view.t);
  TrajectoryRecord row;
  row.t = view.t;
  row.pr = pr;
  row.regret_rel = regret_.value() / (t * regret_first_);
  row.vio_rel = violation_.empty() ? 0.0 : violation_.back().value() / (t * vio_first_);
  row.dec_dev = last_dec_dev_;
  row.param_err = last_param_err_;
  row.g = view.constraint_values;
  records_.push_back(std::move(row));
}

RunSummary MetricsRecorder::summary() const {
  RunSummary out;
  out.horizon = seen_;
  out.regret = regret_.value();
  out.violation = Vector::Zero(static_cast<Index>(violation_.size()));
  for (std::size_t i = 0; i < violation_.size(); ++i) out.violation[static_cast<Index>(i)] = violation_[i].value();
  out.final_dec_dev = last_dec_dev_;
  out.final_param_err = last_param_err_;
  return out;
}

std::size_t default_stride(std::size_t horizon) { return horizon <= 100000 ? 1 : 10; }

double trailing_mean(const std::vector<TrajectoryRecord>& records, std::size_t t,
                     const std::function<double(const TrajectoryRecord&)>& field, double fraction) {
  require(fraction > 0.0 && fraction <= 1.0, "window fraction must lie in (0, 1]");
  const double start = (1.0 - fraction) * static_cast<double>(t);
  KahanSum sum;
  std::size_t count = 0;
  for (const auto& row : records) {
    if (row.t > t || static_cast<double>(row.t) <= start) continue;
    sum.add(field(row));
    ++count;
  }
  require(count > 0, "no recorded rows in the trailing window");
  return sum.value() / static_cast<double>(count);
}

void TrajectoryAverager::add(const std::vector<TrajectoryRecord>& run) {
  if (count_ == 0) {
    sum_ = run;
    count_ = 1;
    return;
  }
  require(run.size() == sum_.size(), "trajectories differ in length");
  for (std::size_t r = 0; r < run.size(); ++r) {
    TrajectoryRecord& out = sum_[r];
    const TrajectoryRecord& row = run[r];
    require(row.t == out.t, "trajectories recorded at different iterations");
    out.pr += row.pr;
    out.regret_rel += row.regret_rel;
    out.vio_rel += row.vio_rel;
    out.dec_dev += row.dec_dev;
    out.param_err += row.param_err;
    out.g += row.g;
  }
  ++count_;
}

std::vector<TrajectoryRecord> TrajectoryAverager::mean() const {
  std::vector<TrajectoryRecord> out = sum_;
  if (count_ <= 1) return out;
  const double scale = 1.0 / static_cast<double>(count_);
  for (auto& row : out) {
    row.pr *= scale;
    row.regret_rel *= scale;
    row.vio_rel *= scale;
    row.dec_dev *= scale;
    row.param_err *= scale;
    row.g *= scale;
  }
  return out;
}

}  // namespace perfpd
