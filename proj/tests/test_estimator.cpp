#include <doctest.h>

#include "perfpd/distmap.hpp"
#include "perfpd/estimator.hpp"

using namespace perfpd;

TEST_CASE("step-size rules") {
  CHECK(default_zeta(1.0, 9.0, 1) == doctest::Approx(2.0 / 19.0));
  const StepSizeRule theo = StepSizeRule::theoretical(1.0, 9.0);
  CHECK(theo(5) == doctest::Approx(2.0 / 23.0));
  for (std::size_t t = 1; t < 1000; t += 37) CHECK(theo(t) < 2.0 / 9.0);
  CHECK(StepSizeRule::shifted(10.0)(1) == doctest::Approx(1.0 / 11.0));
  CHECK(StepSizeRule::constant(1.0)(123) == 1.0);
  CHECK_THROWS_AS(default_zeta(0.0, 1.0, 1), ContractViolation);
  CHECK_THROWS_AS(default_zeta(1.0, 1.0, 0), ContractViolation);
}

TEST_CASE("update follows the least-squares recursion") {
  EstimatorState s = EstimatorState::zero(2, 2);
  Vector u(2), z(2), zp(2);
  u << 1.0, 2.0;
  z << 0.0, 1.0;
  zp << 3.0, 1.0;
  apply_update(s, u, z, zp, 0.5);
  // A_hat = 0.5 (zp - z) u^T
  Matrix expected(2, 2);
  expected << 1.5, 3.0, 0.0, 0.0;
  CHECK((s.a_hat - expected).norm() < 1e-15);
  CHECK(s.t == 2);

  const EstimatorState next = ls_update(s, u, z, zp, StepSizeRule::constant(1.0));
  CHECK(s.t == 2);
  CHECK(next.t == 3);
  CHECK_THROWS_AS(apply_update(s, Vector::Zero(3), z, zp, 0.1), ContractViolation);
}

TEST_CASE("noiseless base with basis probes recovers A exactly") {
  Rng rng = make_rng(1, 0, Stream::Construction);
  std::normal_distribution<double> normal;
  Matrix a(5, 3);
  for (Index i = 0; i < 5; ++i)
    for (Index j = 0; j < 3; ++j) a(i, j) = normal(rng);
  const LocationFamilyMap map(BaseDistribution::point_mass(Vector::LinSpaced(5, 1.0, 2.0)), a);
  Simulator sim(map, make_rng(1, 0, Stream::Observations));
  EstimatorState s = EstimatorState::zero(5, 3);
  const Vector theta = Vector::Constant(3, 0.3);
  for (Index j = 0; j < 3; ++j) {
    const Vector u = Vector::Unit(3, j);
    const Vector z = sim.observe(theta);
    const Vector zp = sim.observe(theta + u);
    apply_update(s, u, z, zp, StepSizeRule::constant(1.0));
  }
  CHECK((s.a_hat - a).norm() <= 1e-12);
}

TEST_CASE("decay constants") {
  const NoiseSpec noise = NoiseSpec::standard_normal(2);  // kappa = (1, 2, 6)
  CHECK(decay_constant(noise, 1.0, 3.0) == doctest::Approx(std::max(13.0, 48.0)));
  CHECK(decay_constant(noise, 10.0, 0.0) == doctest::Approx(130.0));
  CHECK(decay_bound(noise, 48.0, 4) == doctest::Approx(3.0));
  CHECK(sequence_bound(2.0, 1.0, 1.0, 1) == doctest::Approx(1.0));
}

TEST_CASE("sequence recursion stays below its bound") {
  for (double t0 : {1.0, 3.5, 50.0}) {
    for (double alpha : {0.1, 1.0, 20.0}) {
      for (double s1 : {0.0, 0.5, 10.0}) {
        double s = s1;
        for (std::size_t t = 1; t <= 5000; ++t) {
          CHECK_MESSAGE(s <= sequence_bound(t0, alpha, s1, t) * (1.0 + 1e-12), "t0=", t0, " t=", t);
          const double r = static_cast<double>(t) + t0;
          s = (1.0 - 2.0 / r) * s + alpha / (r * r);
          if (s < 0.0) s = 0.0;
        }
      }
    }
  }
}

TEST_CASE("sequence lemma fails without t0 >= 1") {
  // t0 = 0, S1 = 0, alpha = 1: S2 = alpha / 1 = 1 > max{0, 1}/2.
  const double s2 = (1.0 - 2.0 / 1.0) * 0.0 + 1.0;
  CHECK(s2 > sequence_bound(0.0, 1.0, 0.0, 2));
}

TEST_CASE("base pools") {
  const Vector mean = Vector::LinSpaced(3, -1.0, 1.0);
  Matrix cov(3, 3);
  cov << 2.0, 0.3, 0.0, 0.3, 1.0, 0.1, 0.0, 0.1, 0.5;
  const BaseDistribution base = BaseDistribution::gaussian(mean, cov);

  const BaseSamplePool mm = BaseSamplePool::moment_matched(base);
  CHECK(mm.size() == 6);
  const Vector m = mm.samples().rowwise().mean();
  const Matrix c = mm.samples().colwise() - m;
  CHECK((m - mean).norm() < 1e-14);
  CHECK((c * c.transpose() / 6.0 - cov).norm() < 1e-13);

  const LocationFamilyMap map(base, Matrix::Ones(3, 2));
  Simulator sim(map, make_rng(2, 0, Stream::Observations));
  const BaseSamplePool drawn = BaseSamplePool::draw(sim, 7);
  CHECK(drawn.size() == 7);
  CHECK(drawn.dim() == 3);
  CHECK(sim.queries() == 7);
}
