#include "conetest/builders.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace conetest {

namespace {

Vector constant_basis(int n) {
  return Vector::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
}

void require_strictly_increasing(const Vector& x, int minSize) {
  if (x.size() < minSize) throw ConeError("design too small for this cone");
  for (Eigen::Index i = 1; i < x.size(); ++i)
    if (!(x(i) > x(i - 1)))
      throw ConeError(
          "design points must be strictly increasing; collapse duplicates "
          "first");
}

void attach_generators(ConeSpec& cone) {
  try {
    cone.generators = compute_generators(cone);
  } catch (const ConeError&) {
    // Rank-deficient constraints: leave the cone generator-free; projection
    // falls back to the direct polar solve.
    cone.generators.reset();
  }
}

}  // namespace

ConeSpec build_monotone(int n) {
  if (n < 2) throw ConeError("monotone cone needs n >= 2");
  ConeSpec cone;
  cone.label = "monotone";
  cone.A = Matrix::Zero(n - 1, n);
  for (int i = 0; i < n - 1; ++i) {
    cone.A(i, i) = -1.0;
    cone.A(i, i + 1) = 1.0;
  }
  cone.B = Matrix(0, n);
  cone.nullBasis = constant_basis(n);
  cone.fastPath = FastPath::IsotonicAscending;
  attach_generators(cone);
  return cone;
}

ConeSpec build_convex(const Vector& x) {
  require_strictly_increasing(x, 3);
  const int n = static_cast<int>(x.size());
  ConeSpec cone;
  cone.label = "convex";
  cone.A = Matrix::Zero(n - 2, n);
  for (int i = 0; i < n - 2; ++i) {
    cone.A(i, i) = x(i + 2) - x(i + 1);
    cone.A(i, i + 1) = x(i) - x(i + 2);
    cone.A(i, i + 2) = x(i + 1) - x(i);
  }
  cone.B = Matrix(0, n);
  Matrix span(n, 2);
  span.col(0) = Vector::Ones(n);
  span.col(1) = x;
  cone.nullBasis = orthonormal_columns(span);
  attach_generators(cone);
  return cone;
}

ConeSpec build_third_derivative(const Vector& x) {
  require_strictly_increasing(x, 4);
  const int n = static_cast<int>(x.size());
  ConeSpec cone;
  cone.label = "third-derivative";
  cone.A = Matrix::Zero(n - 3, n);
  for (int i = 0; i < n - 3; ++i) {
    const double x0 = x(i), x1 = x(i + 1), x2 = x(i + 2), x3 = x(i + 3);
    cone.A(i, i) = -(x3 - x2) * (x3 - x1) * (x2 - x1);
    cone.A(i, i + 1) = (x3 - x0) * (x3 - x2) * (x2 - x0);
    cone.A(i, i + 2) = -(x3 - x0) * (x3 - x1) * (x1 - x0);
    cone.A(i, i + 3) = (x1 - x0) * (x2 - x0) * (x2 - x1);
  }
  cone.B = Matrix(0, n);
  Matrix span(n, 3);
  span.col(0) = Vector::Ones(n);
  span.col(1) = x;
  span.col(2) = x.array().square();
  cone.nullBasis = orthonormal_columns(span);
  attach_generators(cone);
  return cone;
}

std::pair<ConeSpec, PartialOrderSpec> build_partial_order(
    const Matrix& points, const Eigen::VectorXi& orientation) {
  const int n = static_cast<int>(points.rows());
  const int d = static_cast<int>(points.cols());
  if (orientation.size() != d)
    throw ConeError("orientation length must match point dimension");
  if (n < 2) throw ConeError("need at least two design points");

  Matrix oriented = points;
  for (int j = 0; j < d; ++j)
    if (orientation(j) < 0) oriented.col(j) = -oriented.col(j);

  // Dominance relation (non-strict coordinate-wise, distinct points).
  std::vector<std::vector<char>> dominates(n, std::vector<char>(n, 0));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      bool leq = true, equal = true;
      for (int c = 0; c < d && leq; ++c) {
        if (oriented(i, c) > oriented(j, c)) leq = false;
        if (oriented(i, c) != oriented(j, c)) equal = false;
      }
      if (leq && equal)
        throw ConeError("duplicate design points; collapse duplicates first");
      if (leq) dominates[i][j] = 1;
    }
  }

  // Transitive reduction: drop any pair implied by a 2-hop path.
  PartialOrderSpec order;
  order.points = points;
  order.orientation = orientation;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (!dominates[i][j]) continue;
      bool implied = false;
      for (int k = 0; k < n && !implied; ++k)
        if (k != i && k != j && dominates[i][k] && dominates[k][j])
          implied = true;
      if (!implied) order.coverPairs.emplace_back(i, j);
    }
  }

  // Connectivity of the comparability graph.
  std::vector<std::vector<int>> adj(n);
  for (const auto& [i, j] : order.coverPairs) {
    adj[i].push_back(j);
    adj[j].push_back(i);
  }
  std::vector<char> seen(n, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int reached = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int w : adj[v]) {
      if (!seen[w]) {
        seen[w] = 1;
        ++reached;
        stack.push_back(w);
      }
    }
  }
  order.connected = reached == n;
  if (!order.connected)
    throw ConeError("design not connected; null space exceeds constants");

  ConeSpec cone;
  cone.label = "isotonic";
  cone.A = Matrix::Zero(static_cast<int>(order.coverPairs.size()), n);
  for (size_t r = 0; r < order.coverPairs.size(); ++r) {
    cone.A(static_cast<int>(r), order.coverPairs[r].first) = -1.0;
    cone.A(static_cast<int>(r), order.coverPairs[r].second) = 1.0;
  }
  cone.B = Matrix(0, n);
  cone.nullBasis = constant_basis(n);
  if (d == 1) {
    bool ascending = true;
    for (int i = 0; i + 1 < n; ++i)
      if (oriented(i, 0) > oriented(i + 1, 0)) ascending = false;
    if (ascending) cone.fastPath = FastPath::IsotonicAscending;
  }
  attach_generators(cone);
  return {cone, order};
}

OrientationFamily build_orientation_family(const Matrix& points) {
  const int d = static_cast<int>(points.cols());
  if (d < 1) throw ConeError("need at least one predictor");
  const int half = 1 << (d - 1);

  OrientationFamily family;
  family.cones.resize(2 * half);
  family.connected.resize(2 * half, false);

  for (int j = 0; j < half; ++j) {
    Eigen::VectorXi orientation(d);
    orientation(0) = 1;  // first coordinate fixed; the rest enumerate signs
    for (int c = 1; c < d; ++c)
      orientation(c) = (j >> (c - 1)) & 1 ? -1 : 1;
    try {
      auto [cone, order] = build_partial_order(points, orientation);
      cone.label = "isotonic[" + std::to_string(j + 1) + "]";
      family.connected[j] = true;
      family.connected[2 * half - 1 - j] = true;
      family.cones[2 * half - 1 - j] = negate_cone(cone);
      family.cones[j] = std::move(cone);
    } catch (const ConeError& e) {
      if (std::string(e.what()).find("not connected") == std::string::npos)
        throw;
      // Disconnected orientation: leave the pair flagged unusable.
      family.connected[j] = false;
      family.connected[2 * half - 1 - j] = false;
    }
  }
  if (!family.anyConnected())
    throw ConeError("design not connected under any orientation");
  return family;
}

std::vector<ConeSpec> build_additive(const std::vector<ConeSpec>& components,
                                     const Matrix* Z) {
  if (components.empty()) throw ConeError("no component cones");
  const int n = components.front().dim();
  const int d = static_cast<int>(components.size());
  for (const auto& c : components) {
    if (c.dim() != n) throw ConeError("component dimensions disagree");
    if (!c.generators)
      throw ConeError("additive components must carry generators");
  }

  // Joint null space with one shared intercept.  Identifiability demands the
  // intercept, the de-meaned component bases and Z be jointly independent.
  const Vector ones = Vector::Ones(n);
  std::vector<Vector> columns;
  columns.push_back(ones);
  for (const auto& c : components) {
    for (Eigen::Index j = 0; j < c.nullBasis.cols(); ++j) {
      Vector col = c.nullBasis.col(j);
      col -= ones * (ones.dot(col) / n);
      if (col.norm() > 1e-9) columns.push_back(col);
    }
  }
  if (Z != nullptr && Z->cols() > 0) {
    if (Z->rows() != n) throw ConeError("covariate rows must match n");
    for (Eigen::Index j = 0; j < Z->cols(); ++j) columns.push_back(Z->col(j));
  }
  Matrix stacked(n, static_cast<Eigen::Index>(columns.size()));
  for (size_t j = 0; j < columns.size(); ++j)
    stacked.col(static_cast<Eigen::Index>(j)) = columns[j];
  Eigen::ColPivHouseholderQR<Matrix> qr(stacked);
  qr.setThreshold(1e-9);
  if (qr.rank() < stacked.cols())
    throw ConeError(
        "additive model not identifiable: component null spaces and "
        "covariates are linearly dependent");
  const Matrix L = orthonormal_columns(stacked);

  // Generators of each composite cone: signed component generators with
  // their L components removed.
  std::vector<Matrix> projected(d);
  for (int k = 0; k < d; ++k) {
    const Matrix& g = *components[k].generators;
    projected[k] = g - L * (L.transpose() * g);
  }

  const int half = 1 << (d - 1);
  std::vector<ConeSpec> family(2 * half);
  for (int j = 0; j < half; ++j) {
    std::vector<int> sign(d, 1);
    for (int c = 1; c < d; ++c) sign[c] = (j >> (c - 1)) & 1 ? -1 : 1;

    Eigen::Index total = 0;
    for (int k = 0; k < d; ++k) total += projected[k].cols();
    Matrix gen(n, total);
    Eigen::Index at = 0;
    for (int k = 0; k < d; ++k) {
      gen.middleCols(at, projected[k].cols()) =
          sign[k] > 0 ? projected[k] : (-projected[k]).eval();
      at += projected[k].cols();
    }

    ConeSpec cone;
    cone.label = "additive[" + std::to_string(j + 1) + "]";
    cone.A = Matrix(0, n);
    cone.B = Matrix(0, n);
    cone.nullBasis = L;
    cone.generators = std::move(gen);
    family[j] = cone;
    family[2 * half - 1 - j] = negate_cone(cone);
    family[2 * half - 1 - j].label =
        "additive[" + std::to_string(2 * half - j) + "]";
  }
  return family;
}

}  // namespace conetest
