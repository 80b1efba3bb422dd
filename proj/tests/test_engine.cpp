#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "conetest/builders.hpp"
#include "conetest/engine.hpp"
#include "conetest/rng.hpp"

using namespace conetest;

namespace {

std::vector<ConeSpec> monotone_double(int n) {
  const ConeSpec cone = build_monotone(n);
  return {cone, negate_cone(cone)};
}

Vector random_vector(int n, CounterRng& rng) {
  Vector y(n);
  for (int i = 0; i < n; ++i) y(i) = rng.next_normal();
  return y;
}

}  // namespace

TEST_CASE("statistic on n=2 picks the right cone") {
  const auto family = monotone_double(2);
  const Matrix nullBasis = family[0].nullBasis;

  Vector up(2);
  up << 1, 2;
  TestOutcome out = statistic_T(up, family, nullBasis);
  CHECK(out.components[0] == doctest::Approx(1.0));
  CHECK(out.components[1] == doctest::Approx(0.0));
  CHECK(out.T == doctest::Approx(1.0));
  CHECK(out.argmaxCone == 0);

  Vector down(2);
  down << 2, 1;
  out = statistic_T(down, family, nullBasis);
  CHECK(out.components[0] == doctest::Approx(0.0));
  CHECK(out.components[1] == doctest::Approx(1.0));
  CHECK(out.T == doctest::Approx(1.0));
  CHECK(out.argmaxCone == 1);
}

TEST_CASE("statistic is zero when both cone fits collapse to S") {
  // The two-sided family on a vector orthogonal to every generator
  // direction: alternate signs around the mean pool to the mean.
  const auto family = monotone_double(4);
  Vector y(4);
  y << 1, -1, 1, -1.5;
  const TestOutcome out = statistic_T(y, family, family[0].nullBasis);
  // Both projections exist; T in [0,1] always, and fits match projections.
  CHECK(out.T >= 0.0);
  CHECK(out.T <= 1.0);
  CHECK(out.coneFits.size() == 2);
}

TEST_CASE("statistic rejects y inside S") {
  const auto family = monotone_double(5);
  CHECK_THROWS_WITH_AS(
      statistic_T(Vector::Ones(5), family, family[0].nullBasis),
      doctest::Contains("degenerate"), ConeError);
}

TEST_CASE("known-G null simulation is deterministic and in range") {
  const auto family = monotone_double(12);
  const NullDistribution a =
      simulate_null_knownG(family, family[0].nullBasis, 500, 99);
  const NullDistribution b =
      simulate_null_knownG(family, family[0].nullBasis, 500, 99);
  REQUIRE(a.samples.size() == 500);
  CHECK(a.samples == b.samples);  // bit-for-bit
  CHECK(std::is_sorted(a.samples.begin(), a.samples.end()));
  CHECK(a.samples.front() >= 0.0);
  CHECK(a.samples.back() <= 1.0);

  const NullDistribution c =
      simulate_null_knownG(family, family[0].nullBasis, 500, 100);
  CHECK(a.samples != c.samples);
}

TEST_CASE("worker count does not change the simulation") {
  const auto family = monotone_double(10);
  setenv("CONETEST_THREADS", "1", 1);
  const NullDistribution serial =
      simulate_null_knownG(family, family[0].nullBasis, 300, 5);
  setenv("CONETEST_THREADS", "4", 1);
  const NullDistribution parallel =
      simulate_null_knownG(family, family[0].nullBasis, 300, 5);
  unsetenv("CONETEST_THREADS");
  CHECK(serial.samples == parallel.samples);
}

TEST_CASE("standardized residuals have mean zero and unit sd") {
  CounterRng rng(3, 3);
  const Vector y = random_vector(20, rng);
  const ConeSpec cone = build_monotone(20);
  const Vector r = standardized_residuals(y, cone.nullBasis);
  CHECK(std::fabs(r.mean()) < 1e-12);
  CHECK(r.squaredNorm() / 20.0 == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(standardized_residuals(Vector::Ones(20), cone.nullBasis),
                  ConeError);
}

TEST_CASE("standardized residuals match hand least squares") {
  // y quadratic in x over a linear null: residuals of the LS line.
  Vector x(5);
  x << 0, 1, 2, 3, 4;
  Vector y = x.array().square();
  Matrix basis(5, 2);
  basis.col(0) = Vector::Ones(5);
  basis.col(1) = x;
  // Hand solve: X'X = [[5,10],[10,30]], X'y = [30, 100];
  // beta = (-2, 4), fitted = -2 + 4x, residuals (2,-1,-2,-1,2).
  Vector resid(5);
  resid << 2, -1, -2, -1, 2;
  const Vector r = standardized_residuals(y, orthonormal_columns(basis));
  const Vector expect = resid / std::sqrt(resid.squaredNorm() / 5.0);
  CHECK((r - expect).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("bootstrap null accepts symmetric two-point residuals") {
  const auto family = monotone_double(8);
  Vector resid(8);
  resid << 1, -1, 1, -1, 1, -1, 1, -1;
  const NullDistribution d =
      simulate_null_bootstrap(family, family[0].nullBasis, resid, 200, 17);
  CHECK(d.samples.front() >= 0.0);
  CHECK(d.samples.back() <= 1.0);
  const NullDistribution d2 =
      simulate_null_bootstrap(family, family[0].nullBasis, resid, 200, 17);
  CHECK(d.samples == d2.samples);
}

TEST_CASE("p-value and critical value follow the order-statistic rules") {
  NullDistribution dist;
  dist.samples = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  dist.nsim = 9;
  // (1 + #{>= t}) / (1 + nsim)
  CHECK(dist.p_value(0.35) == doctest::Approx(7.0 / 10.0));
  CHECK(dist.p_value(0.95) == doctest::Approx(1.0 / 10.0));
  CHECK(dist.p_value(0.0) == doctest::Approx(1.0));
  // ceil((1-alpha)(n+1)) with alpha=0.2 -> ceil(8) = 8th order statistic.
  CHECK(dist.critical_value(0.2) == doctest::Approx(0.8));
  CHECK(dist.critical_value(0.5) == doctest::Approx(0.5));
  CHECK(dist.critical_value(1e-9) == doctest::Approx(0.9));
}

TEST_CASE("run_test end to end under H0 keeps its level") {
  // Nested simulation: level within Monte Carlo error of alpha.
  const int n = 20, nsim = 400, outer = 400;
  const auto family = monotone_double(n);
  const NullDistribution null =
      simulate_null_knownG(family, family[0].nullBasis, nsim, 2001);
  const double cv = null.critical_value(0.05);
  int rejections = 0;
  for (int r = 0; r < outer; ++r) {
    CounterRng rng(31337, r);
    const Vector y = random_vector(n, rng);
    if (statistic_value(y, family, family[0].nullBasis) > cv) ++rejections;
  }
  const double rate = static_cast<double>(rejections) / outer;
  CHECK(rate > 0.02);
  CHECK(rate < 0.09);
}

TEST_CASE("run_test wires the pieces together") {
  CounterRng rng(8, 8);
  Dataset data;
  data.y = random_vector(15, rng);
  data.y += 2.0 * Vector::LinSpaced(15, 0.0, 1.0);
  data.x = Matrix(15, 0);
  data.Z = Matrix(15, 0);
  const auto family = monotone_double(15);
  const TestOutcome out = run_test(data, family, family[0].nullBasis, 0.05,
                                   300, 12, NullMode::KnownGaussian);
  CHECK(out.pValue > 0.0);
  CHECK(out.pValue <= 1.0);
  CHECK(out.T >= 0.0);
  CHECK(out.T <= 1.0);
  CHECK(out.reject == (out.T > out.criticalValue));

  const TestOutcome boot = run_test(data, family, family[0].nullBasis, 0.05,
                                    300, 12, NullMode::Bootstrap);
  CHECK(boot.nullProvenance == NullProvenance::Bootstrap);
}

TEST_CASE("null distribution cache round-trips") {
  const auto family = monotone_double(6);
  NullDistribution d =
      simulate_null_knownG(family, family[0].nullBasis, 64, 77);
  const auto path = std::filesystem::temp_directory_path() / "conetest_null.bin";
  save_null_distribution(d, path.string());
  const auto loaded = load_null_distribution(path.string(), d.coneSetHash);
  REQUIRE(loaded.has_value());
  CHECK(loaded->samples == d.samples);
  CHECK(loaded->seed == d.seed);
  CHECK(loaded->nsim == d.nsim);
  CHECK(loaded->provenance == d.provenance);
  // A different hash must refuse the file.
  CHECK_FALSE(load_null_distribution(path.string(), d.coneSetHash + 1));
  std::filesystem::remove(path);
}

TEST_CASE("statistic is invariant to null-space shifts and scaling") {
  CounterRng rng(4, 4);
  const ConeSpec cone = build_convex(Vector::LinSpaced(9, 0.0, 1.0));
  const std::vector<ConeSpec> family{cone, negate_cone(cone)};
  for (int trial = 0; trial < 50; ++trial) {
    const Vector y = random_vector(9, rng);
    const double t = statistic_value(y, family, cone.nullBasis);
    const Vector shift =
        cone.nullBasis * Vector{{rng.next_normal() * 5, rng.next_normal()}};
    const double sigma = 0.1 + 3.0 * rng.next_uniform();
    CHECK(statistic_value(y + shift, family, cone.nullBasis) ==
          doctest::Approx(t).epsilon(1e-9));
    CHECK(statistic_value(sigma * y, family, cone.nullBasis) ==
          doctest::Approx(t).epsilon(1e-9));
  }
}

TEST_CASE("p-values under H0 are stochastically no smaller than uniform") {
  const int n = 15, nsim = 199, outer = 400;
  const auto family = monotone_double(n);
  const NullDistribution null =
      simulate_null_knownG(family, family[0].nullBasis, nsim, 555);
  std::vector<double> pvals;
  for (int r = 0; r < outer; ++r) {
    CounterRng rng(556, r);
    pvals.push_back(null.p_value(
        statistic_value(random_vector(n, rng), family, family[0].nullBasis)));
  }
  // At each checked level the rejection rate may not exceed the level by
  // more than 3 binomial standard errors.
  for (const double level : {0.01, 0.05, 0.1, 0.25, 0.5}) {
    const int count = static_cast<int>(
        std::count_if(pvals.begin(), pvals.end(),
                      [&](double p) { return p <= level; }));
    const double rate = static_cast<double>(count) / outer;
    CHECK(rate <= level + 3.0 * std::sqrt(level * (1 - level) / outer));
  }
}

TEST_CASE("under a fixed alternative T concentrates at a positive constant") {
  // Medians across n within 20% of one another and above the critical value.
  std::vector<double> medians;
  double worstCv = 0.0;
  for (const int n : {100, 200, 400}) {
    const auto family = monotone_double(n);
    const NullDistribution null =
        simulate_null_knownG(family, family[0].nullBasis, 500, 600 + n);
    worstCv = std::max(worstCv, null.critical_value(0.05));
    std::vector<double> ts;
    for (int r = 0; r < 300; ++r) {
      CounterRng rng(601 + n, r);
      Vector y(n);
      for (int i = 0; i < n; ++i) {
        const double x = static_cast<double>(i) / (n - 1);
        y(i) = 3.0 * std::sin(3.0 * M_PI * x) + rng.next_normal();
      }
      ts.push_back(statistic_value(y, family, family[0].nullBasis));
    }
    std::sort(ts.begin(), ts.end());
    medians.push_back(ts[150]);
  }
  const double lo = *std::min_element(medians.begin(), medians.end());
  const double hi = *std::max_element(medians.begin(), medians.end());
  CHECK(hi / lo < 1.2);
  CHECK(lo > 1.25 * worstCv);
}

TEST_CASE("statistic is zero when the cone family cannot see the residual") {
  // A deliberately non-spanning generator pair: the cone is S plus a single
  // ray, and y's residual is orthogonal to it, so both fits collapse to S.
  const ConeSpec mono = build_monotone(3);
  ConeSpec ray;
  ray.A = Matrix(0, 3);
  ray.B = Matrix(0, 3);
  ray.nullBasis = mono.nullBasis;
  ray.generators = Matrix(mono.generators->col(0));
  Vector w = mono.generators->col(1);
  w -= ray.generators->col(0) * (ray.generators->col(0).dot(w) /
                                 ray.generators->col(0).squaredNorm());
  w -= ray.nullBasis * (ray.nullBasis.transpose() * w);
  const Vector y = Vector::Ones(3) * 2.0 + w;
  const TestOutcome out =
      statistic_T(y, {ray, negate_cone(ray)}, ray.nullBasis);
  CHECK(out.T == doctest::Approx(0.0).epsilon(1e-12));
}
