#include "perfpd/convex_qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace perfpd {

double QuadraticConstraint::value(const Vector& x) const {
  double v = q.dot(x) + r;
  if (p.size() != 0) v += 0.5 * x.dot(p * x);
  return v;
}

Vector QuadraticConstraint::gradient(const Vector& x) const {
  if (p.size() == 0) return q;
  return p * x + q;
}

double ConvexQuadraticProgram::objective(const Vector& x) const {
  double v = c.dot(x);
  if (h.size() != 0) v += 0.5 * x.dot(h * x);
  return v;
}

Vector ConvexQuadraticProgram::gradient(const Vector& x) const {
  if (h.size() == 0) return c;
  return h * x + c;
}

Vector ConvexQuadraticProgram::project_box(const Vector& x) const {
  return x.cwiseMax(lower).cwiseMin(upper);
}

namespace {

Vector constraint_values(const ConvexQuadraticProgram& qp, const Vector& x) {
  Vector g(static_cast<Index>(qp.constraints.size()));
  for (std::size_t i = 0; i < qp.constraints.size(); ++i) {
    g[static_cast<Index>(i)] = qp.constraints[i].value(x);
  }
  return g;
}

Vector lagrangian_gradient(const ConvexQuadraticProgram& qp, const Vector& x, const Vector& weights) {
  Vector grad = qp.gradient(x);
  for (std::size_t i = 0; i < qp.constraints.size(); ++i) {
    const double w = weights[static_cast<Index>(i)];
    if (w != 0.0) grad += w * qp.constraints[i].gradient(x);
  }
  return grad;
}

// Augmented Lagrangian of the inequality block for fixed (lambda, rho).
struct AugmentedObjective {
  const ConvexQuadraticProgram& qp;
  const Vector& lambda;
  double rho;

  Vector shifted(const Vector& x) const {
    return (lambda + rho * constraint_values(qp, x)).cwiseMax(0.0);
  }

  double value(const Vector& x) const {
    const Vector s = shifted(x);
    return qp.objective(x) + (s.squaredNorm() - lambda.squaredNorm()) / (2.0 * rho);
  }

  Vector gradient(const Vector& x) const { return lagrangian_gradient(qp, x, shifted(x)); }
};

double mapping_norm(const ConvexQuadraticProgram& qp, const Vector& x, const Vector& grad) {
  return (x - qp.project_box(x - grad)).cwiseAbs().maxCoeff();
}

// Accelerated projected gradient. Step acceptance and restarts use gradient
// differences only, so progress continues below the resolution of f.
std::size_t minimize_on_box(const AugmentedObjective& phi, Vector& x, double tolerance,
                            std::size_t max_iterations) {
  const ConvexQuadraticProgram& qp = phi.qp;
  double lipschitz = 1.0;
  Vector y = x;
  Vector gx = phi.gradient(x);
  double momentum = 1.0;
  std::size_t it = 0;
  for (; it < max_iterations; ++it) {
    if (mapping_norm(qp, x, gx) <= tolerance) break;

    const Vector gy = phi.gradient(y);
    Vector next, gnext;
    for (int tries = 0; tries < 200; ++tries) {
      next = qp.project_box(y - gy / lipschitz);
      gnext = phi.gradient(next);
      const Vector step = next - y;
      if (step.dot(gnext - gy) <= 0.5 * lipschitz * step.squaredNorm()) break;
      lipschitz *= 2.0;
    }
    const Vector previous = std::move(x);
    x = std::move(next);
    gx = std::move(gnext);
    if ((y - x).dot(x - previous) > 0.0) {
      momentum = 1.0;
      y = x;
    } else {
      const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
      y = x + ((momentum - 1.0) / next_momentum) * (x - previous);
      momentum = next_momentum;
    }
    lipschitz *= 0.98;
  }
  return it;
}

}  // namespace

double kkt_residual(const ConvexQuadraticProgram& qp, const Vector& x, const Vector& multipliers) {
  require_size(x.size(), qp.dim(), "QP point");
  require_size(multipliers.size(), static_cast<Index>(qp.constraints.size()), "QP multipliers");
  const Vector g = constraint_values(qp, x);
  const Vector grad = lagrangian_gradient(qp, x, multipliers);
  double res = mapping_norm(qp, x, grad);
  res = std::max(res, (qp.lower - x).cwiseMax(0.0).maxCoeff());
  res = std::max(res, (x - qp.upper).cwiseMax(0.0).maxCoeff());
  for (Index i = 0; i < g.size(); ++i) {
    res = std::max(res, std::max(0.0, g[i]));
    res = std::max(res, std::max(0.0, -multipliers[i]));
    res = std::max(res, std::abs(multipliers[i] * g[i]));
  }
  return res;
}

QpSolution solve_augmented_lagrangian(const ConvexQuadraticProgram& qp, const QpOptions& options) {
  const Index n = qp.dim();
  require_size(qp.lower.size(), n, "QP lower bound");
  require_size(qp.upper.size(), n, "QP upper bound");
  require((qp.lower.array() <= qp.upper.array()).all(), "QP box is empty");

  const Index m = static_cast<Index>(qp.constraints.size());
  Vector lambda = Vector::Zero(m);
  Vector x = qp.project_box(Vector::Zero(n));
  double rho = 10.0;
  double last_violation = std::numeric_limits<double>::infinity();

  QpSolution out;
  double inner_tol = 1e-3;
  for (std::size_t outer = 0; outer < options.max_outer; ++outer) {
    AugmentedObjective phi{qp, lambda, rho};
    out.iterations += minimize_on_box(phi, x, inner_tol, options.max_inner);
    lambda = phi.shifted(x);

    out.kkt_residual = kkt_residual(qp, x, lambda);
    if (out.kkt_residual <= options.tolerance) {
      out.converged = true;
      break;
    }
    const double violation = m > 0 ? constraint_values(qp, x).cwiseMax(0.0).maxCoeff() : 0.0;
    if (violation > 0.25 * last_violation && rho < 1e10) rho *= 10.0;
    last_violation = violation;
    inner_tol = std::max(0.1 * options.tolerance, 0.1 * inner_tol);
  }
  out.x = x;
  out.multipliers = lambda;
  out.objective = qp.objective(x);
  return out;
}

}  // namespace perfpd
