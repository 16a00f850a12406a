#pragma once

#include <cstddef>
#include <vector>

#include "perfpd/common.hpp"

namespace perfpd {

/// g(x) = 1/2 x^T P x + q^T x + r with P symmetric PSD. An empty P means the
/// constraint is affine.
struct QuadraticConstraint {
  Matrix p;
  Vector q;
  double r = 0.0;

  double value(const Vector& x) const;
  Vector gradient(const Vector& x) const;
};

/// minimize 1/2 x^T H x + c^T x  over  lower <= x <= upper,  g_i(x) <= 0.
struct ConvexQuadraticProgram {
  Matrix h;
  Vector c;
  Vector lower;
  Vector upper;
  std::vector<QuadraticConstraint> constraints;

  Index dim() const { return c.size(); }
  double objective(const Vector& x) const;
  Vector gradient(const Vector& x) const;
  Vector project_box(const Vector& x) const;
};

struct QpOptions {
  double tolerance = 1e-10;
  std::size_t max_outer = 500;
  std::size_t max_inner = 400000;
};

struct QpSolution {
  Vector x;
  Vector multipliers;
  double objective = 0.0;
  double kkt_residual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Max of box-projected Lagrangian gradient mapping, primal infeasibility,
/// dual infeasibility and complementarity.
double kkt_residual(const ConvexQuadraticProgram& qp, const Vector& x, const Vector& multipliers);

/// Augmented Lagrangian outer loop on the g_i with accelerated projected
/// gradient (box projection) for each inner problem.
QpSolution solve_augmented_lagrangian(const ConvexQuadraticProgram& qp, const QpOptions& options = {});

}  // namespace perfpd
