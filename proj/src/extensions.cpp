#include "conetest/extensions.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace conetest {

namespace {

std::vector<ConeSpec> double_cone(const ConeSpec& cone) {
  return {cone, negate_cone(cone)};
}

}  // namespace

WhitenedProblem whiten(const Dataset& data, const ConeSpec& cone,
                       const Matrix& Sigma) {
  const int n = data.n();
  if (Sigma.rows() != n || Sigma.cols() != n)
    throw ConeError("covariance dimension mismatch");
  Eigen::LLT<Matrix> llt(Sigma);
  if (llt.info() != Eigen::Success)
    throw ConeError("covariance must be positive definite");
  // Sigma = U'U with U upper triangular; W = (U')^{-1} = L^{-1}.
  const Matrix L = llt.matrixL();
  const Matrix W = L.triangularView<Eigen::Lower>().solve(Matrix::Identity(n, n));

  WhitenedProblem out;
  out.transform = W;
  out.transformInverse = L;
  out.yTilde = W * data.y;

  // theta in I  <=>  W theta in I_tilde, so A_tilde = A W^{-1} = A L.
  ConeSpec tilde;
  tilde.label = cone.label + " (whitened)";
  if (cone.generatorDefined()) {
    tilde.A = Matrix(0, n);
    tilde.B = Matrix(0, n);
    tilde.nullBasis = orthonormal_columns(W * cone.nullBasis);
    Matrix g = W * *cone.generators;
    g -= tilde.nullBasis * (tilde.nullBasis.transpose() * g);
    tilde.generators = g;
  } else {
    tilde.A = cone.A * L;
    tilde.B = cone.B.rows() > 0 ? Matrix(cone.B * L) : Matrix(0, n);
    tilde.nullBasis = orthonormal_columns(W * cone.nullBasis);
    try {
      tilde.generators = compute_generators(tilde);
    } catch (const ConeError&) {
      tilde.generators.reset();
    }
  }
  out.coneTilde = std::move(tilde);
  return out;
}

Dataset collapse_duplicates(const Dataset& data) {
  const int n = data.n();
  const int d = static_cast<int>(data.x.cols());
  std::map<std::vector<double>, std::vector<int>> groups;
  for (int i = 0; i < n; ++i) {
    std::vector<double> key(d);
    for (int c = 0; c < d; ++c) key[c] = data.x(i, c);
    groups[key].push_back(i);
  }

  Dataset out;
  const int m = static_cast<int>(groups.size());
  out.x = Matrix(m, d);
  out.y = Vector(m);
  out.weights = Vector(m);
  out.Z = Matrix(m, 0);
  out.columnNames = data.columnNames;
  int r = 0;
  for (const auto& [key, idx] : groups) {
    for (int c = 0; c < d; ++c) out.x(r, c) = key[c];
    double sum = 0.0;
    for (int i : idx) sum += data.y(i);
    out.y(r) = sum / static_cast<double>(idx.size());
    out.weights(r) = static_cast<double>(idx.size());
    ++r;
  }
  return out;
}

ConeSpec build_partial_linear(const ConeSpec& cone, const Matrix& Z) {
  if (Z.cols() == 0) return cone;
  const int n = cone.dim();
  if (Z.rows() != n) throw ConeError("covariate rows must match n");
  if (!cone.generators) throw ConeError("cone must carry generators");

  Matrix stacked(n, cone.nullBasis.cols() + Z.cols());
  stacked.leftCols(cone.nullBasis.cols()) = cone.nullBasis;
  stacked.rightCols(Z.cols()) = Z;
  Eigen::ColPivHouseholderQR<Matrix> qr(stacked);
  qr.setThreshold(1e-9);
  if (qr.rank() < stacked.cols())
    throw ConeError(
        "covariates and null space are linearly dependent (identifiability)");
  const Matrix L = orthonormal_columns(stacked);

  ConeSpec lifted;
  lifted.label = cone.label + " + covariates";
  lifted.A = Matrix(0, n);
  lifted.B = Matrix(0, n);
  lifted.nullBasis = L;
  Matrix g = *cone.generators;
  g -= L * (L.transpose() * g);
  lifted.generators = std::move(g);
  return lifted;
}

ConeSpec build_null_kind_cone(const Vector& x, NullKind kind) {
  const int n = static_cast<int>(x.size());

  // Distinct sorted values; duplicates collapse to a shared parameter.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return x(a) < x(b); });
  std::vector<double> distinct;
  std::vector<int> group(n);  // observation -> distinct index
  for (int r = 0; r < n; ++r) {
    const double v = x(order[r]);
    if (distinct.empty() || v > distinct.back()) distinct.push_back(v);
    group[order[r]] = static_cast<int>(distinct.size()) - 1;
  }
  const int m = static_cast<int>(distinct.size());
  Vector xs = Vector::Map(distinct.data(), m);

  ConeSpec base;
  switch (kind) {
    case NullKind::Constant:
      base = build_monotone(m);
      break;
    case NullKind::Linear:
      base = build_convex(xs);
      break;
    case NullKind::Quadratic:
      base = build_third_derivative(xs);
      break;
  }
  if (!base.generators)
    throw ConeError("base cone is missing generators");

  // Expand from distinct values back to observation order.
  Matrix E = Matrix::Zero(n, m);
  for (int i = 0; i < n; ++i) E(i, group[i]) = 1.0;

  const bool identityMap = (m == n) && [&] {
    for (int i = 0; i < n; ++i)
      if (group[i] != i) return false;
    return true;
  }();
  if (identityMap) return base;

  ConeSpec mapped;
  mapped.label = base.label;
  mapped.A = Matrix(0, n);
  mapped.B = Matrix(0, n);
  mapped.nullBasis = orthonormal_columns(E * base.nullBasis);
  Matrix g = E * *base.generators;
  g -= mapped.nullBasis * (mapped.nullBasis.transpose() * g);
  mapped.generators = std::move(g);
  return mapped;
}

TestOutcome test_partial_linear(const Dataset& data, NullKind kind,
                                double alpha, int nsim, std::uint64_t seed,
                                NullMode mode) {
  if (data.x.cols() != 1)
    throw ConeError("partial-linear test expects a single predictor");
  ConeSpec cone = build_null_kind_cone(data.x.col(0), kind);
  if (data.Z.cols() > 0) cone = build_partial_linear(cone, data.Z);
  return run_test(data, double_cone(cone), cone.nullBasis, alpha, nsim, seed,
                  mode);
}

TestOutcome test_additive(const Dataset& data,
                          const std::vector<ConeSpec>& componentCones,
                          const Matrix* Z, double alpha, int nsim,
                          std::uint64_t seed, NullMode mode) {
  const std::vector<ConeSpec> family = build_additive(componentCones, Z);
  return run_test(data, family, family.front().nullBasis, alpha, nsim, seed,
                  mode);
}

TestOutcome test_constant_multid(const Dataset& data, double alpha, int nsim,
                                 std::uint64_t seed, NullMode mode) {
  const OrientationFamily family = build_orientation_family(data.x);
  std::vector<ConeSpec> usable;
  for (size_t j = 0; j < family.cones.size(); ++j)
    if (family.connected[j]) usable.push_back(family.cones[j]);
  const Matrix nullBasis = usable.front().nullBasis;
  return run_test(data, usable, nullBasis, alpha, nsim, seed, mode);
}

}  // namespace conetest
