#include "conetest/cone.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "conetest/projection.hpp"
#include "conetest/rng.hpp"

namespace conetest {

namespace {

Matrix stack_constraints(const Matrix& A, const Matrix* B) {
  if (B == nullptr || B->rows() == 0) return A;
  Matrix C(A.rows() + B->rows(), A.cols());
  C.topRows(A.rows()) = A;
  C.bottomRows(B->rows()) = *B;
  return C;
}

void canonicalize_sign(Matrix& basis) {
  for (Eigen::Index j = 0; j < basis.cols(); ++j) {
    Eigen::Index imax = 0;
    basis.col(j).cwiseAbs().maxCoeff(&imax);
    if (basis(imax, j) < 0.0) basis.col(j) = -basis.col(j);
  }
}

}  // namespace

Matrix orthonormal_columns(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU);
  const double tol = kRankTolerance * std::max(1.0, svd.singularValues()(0));
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > tol) ++r;
  Matrix q = svd.matrixU().leftCols(r);
  canonicalize_sign(q);
  return q;
}

Matrix null_space_basis(const Matrix& A, const Matrix* B) {
  if (A.cols() < 2) throw ConeError("constraint matrix needs n >= 2 columns");
  const Matrix C = stack_constraints(A, B);
  Eigen::JacobiSVD<Matrix> svd(C, Eigen::ComputeFullV);
  const double maxAbs = C.cwiseAbs().maxCoeff();
  const double tol =
      kRankTolerance * std::max(1.0, maxAbs) * std::max(C.rows(), C.cols());
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > tol) ++rank;
  const Eigen::Index k = C.cols() - rank;
  if (k == 0) throw ConeError("empty null space");
  Matrix basis = svd.matrixV().rightCols(k);
  canonicalize_sign(basis);
  return basis;
}

Matrix compute_generators(const ConeSpec& cone) {
  const Eigen::Index m = cone.A.rows();
  if (m == 0) throw ConeError("cone has no inequality constraints");
  const Matrix C = stack_constraints(cone.A, &cone.B);
  Eigen::ColPivHouseholderQR<Matrix> qr(C.transpose());
  qr.setThreshold(kRankTolerance * std::max(1.0, C.cwiseAbs().maxCoeff()));
  if (qr.rank() < C.rows())
    throw ConeError("rank-deficient constraints; use direct QP projection");

  // Minimal-norm solution of [A;B] delta = [e_j;0] via the pseudo-inverse.
  // With no equality rows this is the classical A'(AA')^{-1}.
  Eigen::JacobiSVD<Matrix> svd(C, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Matrix rhs = Matrix::Zero(C.rows(), m);
  rhs.topLeftCorner(m, m).setIdentity();
  Matrix gen = svd.solve(rhs);
  // Scrub roundoff against the null space so delta_j ⊥ S holds tightly.
  if (cone.nullBasis.size() > 0)
    gen -= cone.nullBasis * (cone.nullBasis.transpose() * gen);
  return gen;
}

ConeSpec negate_cone(const ConeSpec& cone) {
  ConeSpec d = cone;
  d.A = -cone.A;
  if (cone.generators) d.generators = -(*cone.generators);
  if (cone.fastPath == FastPath::IsotonicAscending)
    d.fastPath = FastPath::IsotonicDescending;
  else if (cone.fastPath == FastPath::IsotonicDescending)
    d.fastPath = FastPath::IsotonicAscending;
  d.label = cone.label.empty() ? "negated" : ("-" + cone.label);
  return d;
}

double cone_consistency_error(const ConeSpec& cone) {
  double err = 0.0;
  if (cone.A.rows() > 0 && cone.nullBasis.size() > 0)
    err = std::max(err, (cone.A * cone.nullBasis).cwiseAbs().maxCoeff());
  if (cone.B.rows() > 0 && cone.nullBasis.size() > 0)
    err = std::max(err, (cone.B * cone.nullBasis).cwiseAbs().maxCoeff());
  if (cone.generators) {
    const Matrix& g = *cone.generators;
    if (cone.A.rows() > 0) {
      const Matrix ag = cone.A * g;
      err = std::max(err, std::max(0.0, -ag.minCoeff()));
    }
    if (cone.B.rows() > 0)
      err = std::max(err, (cone.B * g).cwiseAbs().maxCoeff());
    if (cone.nullBasis.size() > 0)
      err = std::max(err,
                     (cone.nullBasis.transpose() * g).cwiseAbs().maxCoeff());
  }
  return err;
}

ValidationReport validate_assumptions(const ConeSpec& cone) {
  ValidationReport report;
  const Eigen::Index n = cone.nullBasis.rows();
  const double tol = 1e-8;

  // (A1).  For a constraint cone the largest linear subspace is exactly the
  // null space of [A;B]; check the stored basis spans it.  Generator-defined
  // cones rely on generator ⊥ S plus the (A2) certificate below, which rules
  // out a line inside Omega.
  if (cone.A.rows() > 0) {
    try {
      const Matrix expected = null_space_basis(cone.A, &cone.B);
      report.a1Holds =
          expected.cols() == cone.nullBasis.cols() &&
          (cone.A * cone.nullBasis).cwiseAbs().maxCoeff() < tol;
    } catch (const ConeError&) {
      report.a1Holds = false;
    }
  } else if (cone.generators) {
    report.a1Holds =
        (cone.nullBasis.transpose() * *cone.generators).cwiseAbs().maxCoeff() <
        tol;
  }

  if (!cone.generators || cone.generators->cols() == 0) {
    if (cone.A.rows() == 0) {
      report.a2CertifiedBy = ValidationReport::A2Certificate::Failed;
      report.spanningHolds = false;
      return report;
    }
    // No generator set (rank-deficient A).  Certify (A2) and the spanning
    // condition on sampled cone members: project random vectors onto the
    // cone, strip the S part to land in Omega, and require the projection
    // onto the opposite cone to vanish.  Advisory rather than exact.
    const ConeSpec opposite = negate_cone(cone);
    const Matrix& Q = cone.nullBasis;
    const int probes = std::max<int>(24, 2 * static_cast<int>(n));
    Matrix span(n, Q.cols() + probes);
    span.leftCols(Q.cols()) = Q;
    CounterRng rng(0xA2A2A2A2ULL, 0);
    bool a2ok = true;
    for (int k = 0; k < probes; ++k) {
      Vector z(n);
      for (Eigen::Index i = 0; i < n; ++i) z(i) = rng.next_normal();
      const ProjectionResult p = project_cone(z, cone);
      span.col(Q.cols() + k) = p.fit;
      const Vector omega = p.fit - Q * (Q.transpose() * p.fit);
      if (omega.norm() <= 1e-8) continue;
      const ProjectionResult back = project_cone(omega, opposite);
      if (back.fit.norm() > 1e-7 * omega.norm()) {
        a2ok = false;
        report.violatedIndices.push_back(k);
      }
    }
    report.a2CertifiedBy = a2ok
                               ? ValidationReport::A2Certificate::NumericProjection
                               : ValidationReport::A2Certificate::Failed;
    Eigen::ColPivHouseholderQR<Matrix> spanQr(span);
    spanQr.setThreshold(1e-9);
    report.spanningHolds = spanQr.rank() == n;
    return report;
  }
  const Matrix& g = *cone.generators;
  const Eigen::Index M = g.cols();

  // (A2) sufficient condition: pairwise non-negative Gram entries mean every
  // generator projects to the origin on the opposite cone.
  const Matrix gram = g.transpose() * g;
  bool gramOk = true;
  for (Eigen::Index i = 0; i < M; ++i) {
    for (Eigen::Index j = i + 1; j < M; ++j) {
      const double scale = std::sqrt(gram(i, i) * gram(j, j));
      if (gram(i, j) < -tol * std::max(1.0, scale)) {
        gramOk = false;
        report.violatedPairs.emplace_back(static_cast<int>(i),
                                          static_cast<int>(j));
      }
    }
  }
  if (gramOk) {
    report.a2CertifiedBy = ValidationReport::A2Certificate::PairwiseGram;
  } else {
    // Fallback: project each generator onto the opposite cone and require the
    // projection to vanish (the projection onto S is already zero).
    const ConeSpec opposite = negate_cone(cone);
    bool numericOk = true;
    for (Eigen::Index j = 0; j < M; ++j) {
      const ProjectionResult p = project_cone(g.col(j), opposite);
      if (p.fit.norm() > 1e-7 * std::max(1.0, g.col(j).norm())) {
        numericOk = false;
        report.violatedIndices.push_back(static_cast<int>(j));
      }
    }
    report.a2CertifiedBy = numericOk
                               ? ValidationReport::A2Certificate::NumericProjection
                               : ValidationReport::A2Certificate::Failed;
  }

  if (!report.a1Holds && cone.A.rows() == 0)
    report.a1Holds =
        report.a2CertifiedBy != ValidationReport::A2Certificate::Failed &&
        (cone.nullBasis.transpose() * g).cwiseAbs().maxCoeff() < tol;

  // Spanning: [nullBasis | generators] must have rank n.
  Matrix full(n, cone.nullBasis.cols() + M);
  full.leftCols(cone.nullBasis.cols()) = cone.nullBasis;
  full.rightCols(M) = g;
  Eigen::ColPivHouseholderQR<Matrix> qr(full);
  qr.setThreshold(1e-9);
  report.spanningHolds = qr.rank() == n;
  return report;
}

}  // namespace conetest
