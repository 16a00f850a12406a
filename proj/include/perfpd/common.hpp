#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace perfpd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Random engine used for every stochastic component. One engine per stream;
/// never shared between concurrently running replicas.
using Rng = std::mt19937_64;

/// Thrown when a caller breaks a documented precondition (mostly dimensions).
class ContractViolation : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Named random streams of one run. Streams with different tags are
/// statistically independent for the same (seed, replica).
enum class Stream : std::uint64_t {
  Observations = 1,
  Exploration = 2,
  Initialization = 3,
  Construction = 4,
};

/// Deterministic stream split: the same (seed, replica, stream) triple always
/// yields the same engine state.
Rng make_rng(std::uint64_t seed, std::uint64_t replica, Stream stream);

void require(bool condition, const std::string& message);

inline void require_size(Index actual, Index expected, const char* what) {
  if (actual != expected) {
    throw ContractViolation(std::string(what) + ": expected dimension " + std::to_string(expected) +
                            ", got " + std::to_string(actual));
  }
}

/// Compensated summation; Reg(t) and Vio_i(t) run over 10^5..10^6 terms.
class KahanSum {
public:
  void add(double x) {
    const double y = x - compensation_;
    const double t = sum_ + y;
    compensation_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

}  // namespace perfpd
