#include <doctest.h>

#include "oracles.hpp"
#include "perfpd/convex_qp.hpp"

using namespace perfpd;

TEST_CASE("box-only QP has the clipped unconstrained solution for diagonal H") {
  ConvexQuadraticProgram qp;
  qp.h = Matrix::Identity(3, 3);
  qp.c = Vector(3);
  qp.c << -2.0, 0.5, -0.1;
  qp.lower = Vector::Zero(3);
  qp.upper = Vector::Ones(3);
  const QpSolution sol = solve_augmented_lagrangian(qp);
  CHECK(sol.converged);
  CHECK(sol.x[0] == doctest::Approx(1.0));
  CHECK(sol.x[1] == doctest::Approx(0.0));
  CHECK(sol.x[2] == doctest::Approx(0.1));
  CHECK(sol.kkt_residual <= 1e-9);
}

TEST_CASE("linear budget constraint is active with the expected multiplier") {
  // min 1/2 ||x||^2 - 1^T x s.t. x1 + x2 <= 1  ->  x = (1/2, 1/2), lambda = 1/2.
  ConvexQuadraticProgram qp;
  qp.h = Matrix::Identity(2, 2);
  qp.c = -Vector::Ones(2);
  qp.lower = Vector::Constant(2, -10.0);
  qp.upper = Vector::Constant(2, 10.0);
  qp.constraints.push_back({Matrix(), Vector::Ones(2), -1.0});
  const QpSolution sol = solve_augmented_lagrangian(qp);
  CHECK(sol.x[0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(sol.x[1] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(sol.multipliers[0] == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(kkt_residual(qp, sol.x, sol.multipliers) <= 1e-9);
}

TEST_CASE("augmented Lagrangian agrees with the barrier oracle on random QPs") {
  Rng rng = make_rng(3, 0, Stream::Construction);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 8; ++trial) {
    const Index n = 4 + trial % 3;
    Matrix g(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) g(i, j) = normal(rng);
    ConvexQuadraticProgram qp;
    qp.h = g * g.transpose() / static_cast<double>(n) + 0.1 * Matrix::Identity(n, n);
    qp.c = Vector(n);
    for (Index i = 0; i < n; ++i) qp.c[i] = -2.0 * unit(rng) - 0.5;
    qp.lower = Vector::Zero(n);
    qp.upper = Vector::Constant(n, 0.6);
    qp.constraints.push_back({Matrix(), Vector::Ones(n), -1.0});
    Matrix psi = g.transpose() * g / static_cast<double>(n);
    qp.constraints.push_back({2.0 * psi, Vector::Zero(n), -0.05});

    const QpSolution sol = solve_augmented_lagrangian(qp);
    const oracle::BarrierResult ref = oracle::barrier_solve(qp);
    CHECK(sol.kkt_residual <= 1e-8);
    CHECK(std::abs(sol.objective - static_cast<double>(ref.objective)) <= 1e-8);
  }
}

TEST_CASE("kkt residual detects infeasibility and wrong signs") {
  ConvexQuadraticProgram qp;
  qp.h = Matrix::Identity(1, 1);
  qp.c = Vector::Zero(1);
  qp.lower = Vector::Constant(1, -1.0);
  qp.upper = Vector::Constant(1, 1.0);
  qp.constraints.push_back({Matrix(), Vector::Ones(1), -0.5});
  Vector x(1);
  x << 0.9;
  CHECK(kkt_residual(qp, x, Vector::Zero(1)) >= 0.4);
  x << 0.0;
  CHECK(kkt_residual(qp, x, Vector::Zero(1)) == doctest::Approx(0.0));
  CHECK(kkt_residual(qp, x, -Vector::Ones(1)) >= 0.5);
}
