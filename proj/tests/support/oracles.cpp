#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oracle {

LMatrix to_long(const perfpd::Matrix& m) {
  LMatrix out(static_cast<std::size_t>(m.rows()), LVector(static_cast<std::size_t>(m.cols())));
  for (perfpd::Index i = 0; i < m.rows(); ++i)
    for (perfpd::Index j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  return out;
}

LVector to_long(const perfpd::Vector& v) {
  LVector out(static_cast<std::size_t>(v.size()));
  for (perfpd::Index i = 0; i < v.size(); ++i) out[i] = v[i];
  return out;
}

LVector jacobi_eigenvalues(LMatrix a) {
  const std::size_t n = a.size();
  for (int sweep = 0; sweep < 100; ++sweep) {
    long double off = 0.0L;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-36L) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a[p][q] == 0.0L) continue;
        const long double theta = (a[q][q] - a[p][p]) / (2.0L * a[p][q]);
        const long double t = (theta >= 0 ? 1.0L : -1.0L) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0L));
        const long double c = 1.0L / std::sqrt(t * t + 1.0L);
        const long double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const long double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const long double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
    }
  }
  LVector eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = a[i][i];
  std::sort(eig.begin(), eig.end());
  return eig;
}

std::vector<double> singular_values(const perfpd::Matrix& m) {
  const LMatrix a = to_long(m);
  const std::size_t rows = a.size(), cols = rows ? a[0].size() : 0;
  LMatrix gram(cols, LVector(cols, 0.0L));
  for (std::size_t i = 0; i < cols; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      for (std::size_t k = 0; k < rows; ++k) gram[i][j] += a[k][i] * a[k][j];
  const LVector eig = jacobi_eigenvalues(gram);
  std::vector<double> out;
  for (auto it = eig.rbegin(); it != eig.rend(); ++it) out.push_back(static_cast<double>(std::sqrt(std::max(0.0L, *it))));
  if (rows < cols)
    for (std::size_t i = rows; i < cols; ++i) out[i] = 0.0;
  return out;
}

LVector cholesky_solve(const LMatrix& h, const LVector& b) {
  const std::size_t n = h.size();
  LMatrix l(n, LVector(n, 0.0L));
  for (std::size_t j = 0; j < n; ++j) {
    long double d = h[j][j];
    for (std::size_t k = 0; k < j; ++k) d -= l[j][k] * l[j][k];
    if (d <= 0.0L) throw std::runtime_error("cholesky: matrix not positive definite");
    l[j][j] = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      long double s = h[i][j];
      for (std::size_t k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
      l[i][j] = s / l[j][j];
    }
  }
  LVector y(n);
  for (std::size_t i = 0; i < n; ++i) {
    long double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l[i][k] * y[k];
    y[i] = s / l[i][i];
  }
  LVector x(n);
  for (std::size_t ii = n; ii-- > 0;) {
    long double s = y[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= l[k][ii] * x[k];
    x[ii] = s / l[ii][ii];
  }
  return x;
}

namespace {

struct LQuad {
  LMatrix p;  // empty: affine
  LVector q;
  long double r;

  long double value(const LVector& x) const {
    long double v = r;
    for (std::size_t i = 0; i < x.size(); ++i) v += q[i] * x[i];
    if (!p.empty())
      for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; j < x.size(); ++j) v += 0.5L * x[i] * p[i][j] * x[j];
    return v;
  }
  LVector gradient(const LVector& x) const {
    LVector g = q;
    if (!p.empty())
      for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; j < x.size(); ++j) g[i] += p[i][j] * x[j];
    return g;
  }
};

}  // namespace

BarrierResult barrier_solve(const perfpd::ConvexQuadraticProgram& qp, long double gap) {
  const std::size_t n = static_cast<std::size_t>(qp.dim());
  const LMatrix h = to_long(qp.h);
  const LVector c = to_long(qp.c);
  const LVector lo = to_long(qp.lower);
  const LVector hi = to_long(qp.upper);

  // Every inequality, box included, as a quadratic f(x) <= 0.
  std::vector<LQuad> fs;
  for (std::size_t i = 0; i < n; ++i) {
    LVector e(n, 0.0L);
    e[i] = 1.0L;
    fs.push_back({{}, e, -hi[i]});
    e[i] = -1.0L;
    fs.push_back({{}, e, lo[i]});
  }
  for (const auto& g : qp.constraints)
    fs.push_back({g.p.size() == 0 ? LMatrix{} : to_long(g.p), to_long(g.q), static_cast<long double>(g.r)});

  auto objective = [&](const LVector& x) {
    long double v = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
      v += c[i] * x[i];
      for (std::size_t j = 0; j < n; ++j) v += 0.5L * x[i] * h[i][j] * x[j];
    }
    return v;
  };
  auto strictly_feasible = [&](const LVector& x) {
    for (const auto& f : fs)
      if (!(f.value(x) < 0.0L)) return false;
    return true;
  };

  LVector x(n);
  bool found = false;
  for (long double s = 1.0L; s > 1e-12L; s *= 0.5L) {
    for (std::size_t i = 0; i < n; ++i) x[i] = lo[i] + (0.5L * (hi[i] - lo[i])) * s + 1e-3L * (hi[i] - lo[i]) * (1 - s);
    if (strictly_feasible(x)) {
      found = true;
      break;
    }
  }
  if (!found) throw std::runtime_error("barrier: no strictly feasible start");

  const long double m = static_cast<long double>(fs.size());
  BarrierResult out;
  for (long double t = 1.0L; m / t > gap; t *= 8.0L) {
    for (int it = 0; it < 200; ++it) {
      LVector grad(n, 0.0L);
      LMatrix hess(n, LVector(n, 0.0L));
      for (std::size_t i = 0; i < n; ++i) {
        grad[i] = t * c[i];
        for (std::size_t j = 0; j < n; ++j) {
          grad[i] += t * h[i][j] * x[j];
          hess[i][j] = t * h[i][j];
        }
      }
      for (const auto& f : fs) {
        const long double v = f.value(x);
        const LVector gf = f.gradient(x);
        for (std::size_t i = 0; i < n; ++i) {
          grad[i] += gf[i] / -v;
          for (std::size_t j = 0; j < n; ++j) {
            hess[i][j] += gf[i] * gf[j] / (v * v);
            if (!f.p.empty()) hess[i][j] += f.p[i][j] / -v;
          }
        }
      }
      LVector neg(n);
      for (std::size_t i = 0; i < n; ++i) neg[i] = -grad[i];
      const LVector dx = cholesky_solve(hess, neg);
      long double decrement = 0.0L;
      for (std::size_t i = 0; i < n; ++i) decrement -= grad[i] * dx[i];
      ++out.newton_steps;
      if (decrement / 2.0L < 1e-24L) break;

      auto phi = [&](const LVector& y) {
        long double v = t * objective(y);
        for (const auto& f : fs) v -= std::log(-f.value(y));
        return v;
      };
      const long double phi0 = phi(x);
      long double step = 1.0L;
      LVector y(n);
      for (int ls = 0; ls < 200; ++ls, step *= 0.5L) {
        for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + step * dx[i];
        if (strictly_feasible(y) && phi(y) <= phi0 - 0.25L * step * decrement) break;
      }
      x = y;
    }
  }
  out.x = x;
  out.objective = objective(x);
  return out;
}

}  // namespace oracle
