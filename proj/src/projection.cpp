#include "conetest/projection.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <limits>

namespace conetest {

namespace detail {

// Lawson-Hanson with the least-squares subproblem solved on the Gram matrix
// (|P|^3, no n-dependence - this is the hot loop of the null simulation);
// an ill-conditioned active set falls back to column-pivoted QR on the raw
// columns.
Vector nnls(const Matrix& G, const Vector& target, std::vector<int>& active,
            int maxIter) {
  const int M = static_cast<int>(G.cols());
  active.clear();
  Vector b = Vector::Zero(M);
  if (M == 0 || target.norm() == 0.0) return b;

  const Matrix gram = G.transpose() * G;
  const Vector gty = G.transpose() * target;
  Vector colNorm(M);
  for (int j = 0; j < M; ++j) colNorm(j) = std::max(G.col(j).norm(), 1e-300);
  const double dualTol = 1e-12 * target.norm();

  std::vector<int> passive;
  std::vector<char> inPassive(M, 0);
  Vector w = gty;  // dual = G^T (target - G b), b = 0 initially

  int iter = 0;
  while (iter++ < maxIter) {
    // Entering variable: most positive normalized dual, lowest index on ties.
    int enter = -1;
    double best = 0.0;
    for (int j = 0; j < M; ++j) {
      if (inPassive[j]) continue;
      const double wj = w(j) / colNorm(j);
      if (wj > dualTol && wj > best) {
        best = wj;
        enter = j;
      }
    }
    if (enter < 0) break;
    passive.push_back(enter);
    inPassive[enter] = 1;

    for (;;) {
      const int p = static_cast<int>(passive.size());
      Matrix gpp(p, p);
      Vector rhs(p);
      for (int a = 0; a < p; ++a) {
        rhs(a) = gty(passive[a]);
        for (int c = 0; c < p; ++c) gpp(a, c) = gram(passive[a], passive[c]);
      }
      Vector z;
      Eigen::LDLT<Matrix> ldlt(gpp);
      bool ok = ldlt.info() == Eigen::Success;
      if (ok) {
        z = ldlt.solve(rhs);
        ok = z.allFinite() &&
             (gpp * z - rhs).norm() <= 1e-8 * std::max(1.0, rhs.norm());
      }
      if (!ok) {
        Matrix cols(G.rows(), p);
        for (int a = 0; a < p; ++a) cols.col(a) = G.col(passive[a]);
        z = cols.colPivHouseholderQr().solve(target);
      }

      double minz = std::numeric_limits<double>::infinity();
      for (int a = 0; a < p; ++a) minz = std::min(minz, z(a));
      if (minz > 0.0) {
        for (int a = 0; a < p; ++a) b(passive[a]) = z(a);
        break;
      }

      // Step toward z until the first coefficient hits zero, then drop it.
      double alpha = 1.0;
      for (int a = 0; a < p; ++a) {
        if (z(a) <= 0.0) {
          const double bi = b(passive[a]);
          const double t = bi / (bi - z(a));
          alpha = std::min(alpha, t);
        }
      }
      for (int a = 0; a < p; ++a) {
        const int j = passive[a];
        b(j) += alpha * (z(a) - b(j));
      }
      std::vector<int> kept;
      kept.reserve(passive.size());
      for (int j : passive) {
        if (b(j) > 1e-12 * std::max(1.0, b.maxCoeff())) {
          kept.push_back(j);
        } else {
          b(j) = 0.0;
          inPassive[j] = 0;
        }
      }
      passive.swap(kept);
      if (passive.empty()) break;
      if (++iter > maxIter) break;
    }

    w = gty - gram * b;
  }
  if (iter > maxIter) {
    double worst = 0.0;
    for (int j = 0; j < M; ++j)
      worst = std::max(worst, w(j) / colNorm(j));
    throw ConeError("nnls failed to converge after " +
                    std::to_string(maxIter) + " steps (max dual " +
                    std::to_string(worst) + ")");
  }
  std::sort(passive.begin(), passive.end());
  active = passive;
  return b;
}

}  // namespace detail

namespace {

ProjectionResult finish_cone_result(const Vector& y, const Vector& fit,
                                    const ConeSpec& cone,
                                    std::vector<int> active) {
  ProjectionResult r;
  r.fit = fit;
  const Vector resid = y - fit;
  r.sse = resid.squaredNorm();
  r.kktInnerProduct = fit.dot(resid);
  r.activeGenerators = std::move(active);
  r.maxDualViolation = 0.0;
  if (cone.generators && cone.generators->cols() > 0)
    r.maxDualViolation = (cone.generators->transpose() * resid).maxCoeff();
  return r;
}

// Direct projection onto {A theta >= 0, B theta = 0} via the polar cone:
// Pi_K(y) = y - Pi_{K°}(y) with K° generated by the columns of -[A;B;-B]'.
ProjectionResult project_polyhedral_direct(const Vector& y,
                                           const ConeSpec& cone) {
  const Eigen::Index m = cone.A.rows();
  const Eigen::Index q = cone.B.rows();
  Matrix polar(y.size(), m + 2 * q);
  polar.leftCols(m) = -cone.A.transpose();
  if (q > 0) {
    polar.middleCols(m, q) = cone.B.transpose();
    polar.rightCols(q) = -cone.B.transpose();
  }
  std::vector<int> active;
  const Vector lambda =
      detail::nnls(polar, y, active, 50 * static_cast<int>(polar.cols()) + 50);
  const Vector fit = y - polar * lambda;
  ProjectionResult r;
  r.fit = fit;
  const Vector resid = y - fit;
  r.sse = resid.squaredNorm();
  r.kktInnerProduct = fit.dot(resid);
  r.activeGenerators = std::move(active);
  r.maxDualViolation = m > 0 ? std::max(0.0, -(cone.A * fit).minCoeff()) : 0.0;
  return r;
}

Vector pava_ascending(const Vector& y, const Vector& w) {
  const Eigen::Index n = y.size();
  std::vector<double> level(n), weight(n);
  std::vector<Eigen::Index> size(n);
  Eigen::Index blocks = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    level[blocks] = y(i);
    weight[blocks] = w(i);
    size[blocks] = 1;
    ++blocks;
    while (blocks > 1 && level[blocks - 2] >= level[blocks - 1]) {
      const double tw = weight[blocks - 2] + weight[blocks - 1];
      level[blocks - 2] =
          (weight[blocks - 2] * level[blocks - 2] +
           weight[blocks - 1] * level[blocks - 1]) / tw;
      weight[blocks - 2] = tw;
      size[blocks - 2] += size[blocks - 1];
      --blocks;
    }
  }
  Vector fit(n);
  Eigen::Index pos = 0;
  for (Eigen::Index blk = 0; blk < blocks; ++blk)
    for (Eigen::Index k = 0; k < size[blk]; ++k) fit(pos++) = level[blk];
  return fit;
}

}  // namespace

ProjectionResult project_subspace(const Vector& y, const Matrix& basis) {
  ProjectionResult r;
  if (basis.cols() == 0) {
    r.fit = Vector::Zero(y.size());
    r.sse = y.squaredNorm();
    return r;
  }
  const Vector coef = basis.householderQr().solve(y);
  r.fit = basis * coef;
  const Vector resid = y - r.fit;
  r.sse = resid.squaredNorm();
  r.kktInnerProduct = r.fit.dot(resid);
  r.maxDualViolation = 0.0;
  return r;
}

Vector project_isotonic_pava(const Vector& y, const Vector& weights) {
  if (weights.size() != y.size() || (weights.array() <= 0.0).any())
    throw ConeError("pava weights must be positive and match y");
  return pava_ascending(y, weights);
}

ProjectionResult project_cone(const Vector& y, const ConeSpec& cone) {
  if (y.size() != cone.dim())
    throw ConeError("vector length does not match cone dimension");

  if (cone.fastPath == FastPath::IsotonicAscending ||
      cone.fastPath == FastPath::IsotonicDescending) {
    const Vector ones = Vector::Ones(y.size());
    Vector fit;
    if (cone.fastPath == FastPath::IsotonicAscending) {
      fit = pava_ascending(y, ones);
    } else {
      fit = -pava_ascending(-y, ones);
    }
    return finish_cone_result(y, fit, cone, {});
  }

  if (!cone.generators || cone.generators->cols() == 0) {
    if (cone.A.rows() == 0)
      return project_subspace(y, cone.nullBasis);
    ProjectionResult r = project_polyhedral_direct(y, cone);
    return r;
  }

  // Split off the S component, then nonnegative least squares on Omega.
  const Matrix& Q = cone.nullBasis;
  const Vector sPart = Q * (Q.transpose() * y);
  const Vector resid = y - sPart;
  const Matrix& G = *cone.generators;
  std::vector<int> active;
  const Vector b =
      detail::nnls(G, resid, active, 50 * static_cast<int>(G.cols()) + 50);
  const Vector fit = sPart + G * b;
  return finish_cone_result(y, fit, cone, std::move(active));
}

ProjectionResult project_cone_bruteforce(const Vector& y,
                                         const ConeSpec& cone) {
  if (!cone.generators) throw ConeError("oracle needs generators");
  const Matrix& G = *cone.generators;
  const int M = static_cast<int>(G.cols());
  if (M > 20) throw ConeError("oracle limit: more than 20 generators");

  const Matrix& Q = cone.nullBasis;
  const int k = static_cast<int>(Q.cols());
  const double scale = std::max(1.0, y.norm());

  double bestSse = std::numeric_limits<double>::infinity();
  Vector bestFit = Q * (Q.transpose() * y);
  std::vector<int> bestFace;

  for (unsigned long mask = 0; mask < (1UL << M); ++mask) {
    std::vector<int> face;
    for (int j = 0; j < M; ++j)
      if (mask & (1UL << j)) face.push_back(j);
    Matrix span(y.size(), k + face.size());
    span.leftCols(k) = Q;
    for (size_t a = 0; a < face.size(); ++a)
      span.col(k + a) = G.col(face[a]);

    const Vector coef = span.colPivHouseholderQr().solve(y);
    bool feasible = true;
    for (size_t a = 0; a < face.size(); ++a)
      if (coef(k + a) < -1e-10 * scale) feasible = false;
    if (!feasible) continue;

    const Vector fit = span * coef;
    const Vector resid = y - fit;
    if ((G.transpose() * resid).maxCoeff() > 1e-8 * scale) continue;

    const double sse = resid.squaredNorm();
    if (sse < bestSse - 1e-15 * scale * scale) {
      bestSse = sse;
      bestFit = fit;
      bestFace = face;
    }
  }

  return finish_cone_result(y, bestFit, cone, std::move(bestFace));
}

}  // namespace conetest
