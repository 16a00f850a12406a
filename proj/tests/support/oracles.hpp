#pragma once

#include <vector>

#include "perfpd/convex_qp.hpp"

namespace oracle {

using LMatrix = std::vector<std::vector<long double>>;
using LVector = std::vector<long double>;

LMatrix to_long(const perfpd::Matrix& m);
LVector to_long(const perfpd::Vector& v);

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
LVector jacobi_eigenvalues(LMatrix a);

/// Singular values via eigenvalues of M^T M, descending. Zero-padded when
/// rows < cols.
std::vector<double> singular_values(const perfpd::Matrix& m);

/// Solves H x = b for symmetric positive definite H (Cholesky, long double).
LVector cholesky_solve(const LMatrix& h, const LVector& b);

struct BarrierResult {
  LVector x;
  long double objective = 0.0L;
  int newton_steps = 0;
};

/// Log-barrier interior-point solve of a convex QP with box bounds and convex
/// quadratic constraints, all in long double. Needs a strictly feasible start;
/// the midpoint of a shrunken box scaled towards the origin is tried.
BarrierResult barrier_solve(const perfpd::ConvexQuadraticProgram& qp, long double gap = 1e-15L);

/// Central finite-difference gradient.
template <class F>
perfpd::Vector finite_difference_gradient(const F& f, const perfpd::Vector& x, double h) {
  perfpd::Vector g(x.size());
  perfpd::Vector xp = x, xm = x;
  for (perfpd::Index i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
    xp[i] = x[i];
    xm[i] = x[i];
  }
  return g;
}

}  // namespace oracle
