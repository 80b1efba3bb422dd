#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "conetest/builders.hpp"
#include "conetest/projection.hpp"
#include "conetest/rng.hpp"

using namespace conetest;

namespace {

Vector spaced(int n) {
  Vector x(n);
  for (int i = 0; i < n; ++i) x(i) = static_cast<double>(i) / (n - 1);
  return x;
}

Vector random_vector(int n, CounterRng& rng) {
  Vector y(n);
  for (int i = 0; i < n; ++i) y(i) = rng.next_normal();
  return y;
}

void check_kkt(const ProjectionResult& p, const Vector& y) {
  CHECK(std::fabs(p.kktInnerProduct) <= 1e-8 * std::max(1.0, y.squaredNorm()));
  CHECK(p.maxDualViolation <= 1e-8 * std::max(1.0, y.norm()));
  CHECK(p.sse == doctest::Approx(y.squaredNorm() - p.fit.squaredNorm())
                     .epsilon(1e-7));
}

}  // namespace

TEST_CASE("subspace projection onto the constant span is the mean") {
  Vector y(3);
  y << 1, 2, 3;
  const ProjectionResult p = project_subspace(y, Vector::Ones(3));
  CHECK(p.fit(0) == doctest::Approx(2.0));
  CHECK(p.fit(1) == doctest::Approx(2.0));
  CHECK(p.fit(2) == doctest::Approx(2.0));
  CHECK(p.sse == doctest::Approx(2.0));
}

TEST_CASE("subspace projection is idempotent on members") {
  Matrix basis(4, 2);
  basis << 1, 0, 1, 1, 1, 2, 1, 3;
  const Vector y = basis * Vector{{2.0, -1.0}};
  const ProjectionResult p = project_subspace(y, basis);
  CHECK((p.fit - y).norm() < 1e-12);
  CHECK(p.sse < 1e-20);
}

TEST_CASE("subspace projection solves the normal equations") {
  // Solved by hand: beta = (0.2, 0.2), fit = 0.2 + 0.2 x.
  Matrix basis(4, 2);
  basis << 1, 0, 1, 1, 1, 2, 1, 3;
  Vector y(4);
  y << 0, 1, 0, 1;
  const ProjectionResult p = project_subspace(y, basis);
  Vector expected(4);
  expected << 0.2, 0.4, 0.6, 0.8;
  CHECK((p.fit - expected).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(p.sse == doctest::Approx(0.8).epsilon(1e-12));
  // Residual orthogonal to every basis column.
  CHECK((basis.transpose() * (y - p.fit)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("cone projection keeps feasible points and pools violators") {
  const ConeSpec cone2 = build_monotone(2);
  Vector inc(2);
  inc << 1, 2;
  CHECK((project_cone(inc, cone2).fit - inc).norm() < 1e-12);

  Vector dec(2);
  dec << 2, 1;
  const ProjectionResult p = project_cone(dec, cone2);
  CHECK(p.fit(0) == doctest::Approx(1.5));
  CHECK(p.fit(1) == doctest::Approx(1.5));

  const ConeSpec cone3 = build_monotone(3);
  Vector y(3);
  y << 3, 1, 2;
  const ProjectionResult q = project_cone(y, cone3);
  for (int i = 0; i < 3; ++i) CHECK(q.fit(i) == doctest::Approx(2.0));
  check_kkt(q, y);
}

TEST_CASE("pava handles basic and weighted cases") {
  Vector y(3), w(3);
  y << 1, 2, 3;
  w << 1, 1, 1;
  CHECK((project_isotonic_pava(y, w) - y).norm() == 0.0);

  Vector y2(2), w2(2);
  y2 << 2, 1;
  w2 << 1, 3;
  const Vector fit = project_isotonic_pava(y2, w2);
  CHECK(fit(0) == doctest::Approx(1.25));
  CHECK(fit(1) == doctest::Approx(1.25));

  CHECK_THROWS_AS(project_isotonic_pava(y2, Vector::Zero(2)), ConeError);
}

TEST_CASE("pava agrees with the generator path") {
  // Compare against NNLS over generators with the fast path disabled.
  CounterRng rng(55, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 8;
    ConeSpec cone = build_monotone(n);
    cone.fastPath = FastPath::None;
    const Vector y = random_vector(n, rng);
    const Vector viaPava = project_isotonic_pava(y, Vector::Ones(n));
    const ProjectionResult viaNnls = project_cone(y, cone);
    CHECK((viaPava - viaNnls.fit).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("brute-force oracle matches the main path") {
  CounterRng rng(77, 0);
  const ConeSpec mono = build_monotone(2);
  Vector dec(2);
  dec << 2, 1;
  const ProjectionResult viaOracle = project_cone_bruteforce(dec, mono);
  CHECK(viaOracle.fit(0) == doctest::Approx(1.5));
  CHECK(viaOracle.fit(1) == doctest::Approx(1.5));

  const ConeSpec convex = build_convex(spaced(5));
  for (int trial = 0; trial < 50; ++trial) {
    const Vector y = random_vector(5, rng);
    const ProjectionResult main = project_cone(y, convex);
    const ProjectionResult oracle = project_cone_bruteforce(y, convex);
    CHECK((main.fit - oracle.fit).cwiseAbs().maxCoeff() < 1e-8);
  }

  // Member of S is returned untouched.
  const Vector s = Vector::Ones(5) * 3.0 + 2.0 * spaced(5);
  CHECK((project_cone_bruteforce(s, convex).fit - s).norm() < 1e-10);
}

TEST_CASE("oracle refuses oversized generator sets") {
  ConeSpec big = build_monotone(30);
  Vector y = Vector::Zero(30);
  CHECK_THROWS_WITH_AS(project_cone_bruteforce(y, big),
                       doctest::Contains("oracle limit"), ConeError);
}

TEST_CASE("translation and scale equivariance") {
  CounterRng rng(11, 4);
  const ConeSpec cone = build_convex(spaced(7));
  for (int trial = 0; trial < 40; ++trial) {
    const Vector y = random_vector(7, rng);
    const Vector s = cone.nullBasis *
                     Vector{{3.0 * rng.next_normal(), 2.0 * rng.next_normal()}};
    const ProjectionResult base = project_cone(y, cone);
    const ProjectionResult shifted = project_cone(y + s, cone);
    CHECK((shifted.fit - base.fit - s).cwiseAbs().maxCoeff() < 1e-9);

    const double sigma = 0.5 + rng.next_uniform();
    const ProjectionResult scaled = project_cone(sigma * y, cone);
    CHECK((scaled.fit - sigma * base.fit).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("projection is 1-Lipschitz and satisfies residual duality") {
  CounterRng rng(13, 2);
  const ConeSpec cone = build_monotone(10);
  for (int trial = 0; trial < 60; ++trial) {
    const Vector y1 = random_vector(10, rng);
    const Vector y2 = random_vector(10, rng);
    const ProjectionResult p1 = project_cone(y1, cone);
    const ProjectionResult p2 = project_cone(y2, cone);
    CHECK((p1.fit - p2.fit).norm() <= (y1 - y2).norm() + 1e-12);
    CHECK(y1.squaredNorm() ==
          doctest::Approx(p1.fit.squaredNorm() + p1.sse).epsilon(1e-9));
  }
}

TEST_CASE("zero input projects to zero without iteration") {
  const ConeSpec cone = build_convex(spaced(6));
  const ProjectionResult p = project_cone(Vector::Zero(6), cone);
  CHECK(p.fit.norm() == 0.0);
  CHECK(p.sse == 0.0);
}

TEST_CASE("direct polar fallback matches the generator path") {
  // Strip the generators so project_cone exercises the fallback.
  CounterRng rng(19, 6);
  for (int trial = 0; trial < 30; ++trial) {
    const ConeSpec cone = build_convex(spaced(6));
    ConeSpec stripped = cone;
    stripped.generators.reset();
    const Vector y = random_vector(6, rng);
    const ProjectionResult a = project_cone(y, cone);
    const ProjectionResult b = project_cone(y, stripped);
    CHECK((a.fit - b.fit).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("KKT certificates hold on random instances") {
  CounterRng rng(23, 9);
  for (int trial = 0; trial < 120; ++trial) {
    const int n = 4 + static_cast<int>(rng.next_below(10));
    ConeSpec cone;
    switch (trial % 3) {
      case 0: cone = build_monotone(n); break;
      case 1: cone = build_convex(spaced(n)); break;
      default: cone = build_third_derivative(spaced(std::max(n, 4)));
    }
    const Vector y = random_vector(cone.dim(), rng);
    check_kkt(project_cone(y, cone), y);
  }
}
