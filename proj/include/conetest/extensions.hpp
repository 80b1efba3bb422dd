#pragma once

#include "conetest/builders.hpp"
#include "conetest/engine.hpp"

namespace conetest {

/// A regression problem mapped to i.i.d. unit-variance errors.  With
/// Sigma = U'U (Cholesky), the transform is W = (U')^{-1}: y_tilde = W y,
/// constraint rows A_tilde = A U', and the test runs in the transformed
/// coordinates.
struct WhitenedProblem {
  Vector yTilde;
  ConeSpec coneTilde;
  Matrix transform;         // W
  Matrix transformInverse;  // W^{-1} = U'
};

/// Maps data and cone through the whitening transform for error covariance
/// Sigma (symmetric positive definite).  The transformed cone is rebuilt
/// from its mapped constraints so generators and null basis stay certified.
WhitenedProblem whiten(const Dataset& data, const ConeSpec& cone,
                       const Matrix& Sigma);

/// Averages responses over exactly-equal design rows; group sizes become
/// weights (error covariance diag(1/w) downstream).
Dataset collapse_duplicates(const Dataset& data);

/// Lifts a cone to the partial-linear null space L = span(nullBasis ∪ Z):
/// generators are replaced by their residuals off L, and the result is
/// generator-defined.  Throws when [nullBasis | Z] is rank deficient.
ConeSpec build_partial_linear(const ConeSpec& cone, const Matrix& Z);

enum class NullKind { Constant, Linear, Quadratic };

/// One-predictor cone matched to the parametric null (monotone for constant,
/// convex for linear, positive-third-derivative for quadratic), built on the
/// sorted distinct x values and mapped back to observation order.  Duplicate
/// x values share a parameter, so the returned cone is generator-defined
/// when duplicates or a nontrivial permutation are involved.
ConeSpec build_null_kind_cone(const Vector& x, NullKind kind);

/// Linear (or constant/quadratic) model against the partial-linear
/// alternative: double cone of the lifted null-kind cone, covariates in L.
TestOutcome test_partial_linear(const Dataset& data, NullKind kind,
                                double alpha, int nsim, std::uint64_t seed,
                                NullMode mode = NullMode::KnownGaussian);

/// Additive 2^d-cone test: T maximized over every sign pattern of the
/// component cones; the null is simulated once for the whole family.
TestOutcome test_additive(const Dataset& data,
                          const std::vector<ConeSpec>& componentCones,
                          const Matrix* Z, double alpha, int nsim,
                          std::uint64_t seed,
                          NullMode mode = NullMode::KnownGaussian);

/// Constant-mean test against the orientation family (double, quadruple or
/// octuple cone for d = 1, 2, 3).  Disconnected orientations are skipped;
/// throws when none is connected.
TestOutcome test_constant_multid(const Dataset& data, double alpha, int nsim,
                                 std::uint64_t seed,
                                 NullMode mode = NullMode::KnownGaussian);

}  // namespace conetest
