#pragma once

#include <Eigen/Dense>
#include <vector>

#include "conetest/cone.hpp"

namespace conetest {

/// A fitted projection with its KKT certificates.
///
/// For cone projections the two optimality conditions are carried explicitly:
/// kktInnerProduct = <fit, y - fit> (zero at the optimum) and
/// maxDualViolation = max_j <y - fit, delta_j> (non-positive at the optimum).
struct ProjectionResult {
  Vector fit;
  double sse = 0.0;
  std::vector<int> activeGenerators;
  double kktInnerProduct = 0.0;
  double maxDualViolation = 0.0;
};

/// Least-squares projection onto the column span of `basis` (any full
/// column-rank matrix; orthonormality is not required).
ProjectionResult project_subspace(const Vector& y, const Matrix& basis);

/// Projection onto the polyhedral cone.
///
/// Main path: split y into its S part plus an active-set nonnegative
/// least-squares fit over the generators of Omega.  Monotone complete-order
/// cones take the pool-adjacent-violators fast path instead.  Cones without
/// generators (rank-deficient A) fall back to a direct solve of the polar
/// problem on {A theta >= 0, B theta = 0}.
/// Deterministic for fixed input; throws ConeError if the active-set loop
/// fails to converge within 50*M steps.
ProjectionResult project_cone(const Vector& y, const ConeSpec& cone);

/// Weighted isotonic regression (pool-adjacent-violators).  weights must be
/// positive; equals project_cone on the monotone cone to ~1e-10.
Vector project_isotonic_pava(const Vector& y, const Vector& weights);

/// Exact reference projection by face enumeration: every subset of the
/// generator set is a face; project onto span(S ∪ face), keep feasible
/// candidates, return the SSE minimizer.  Requires M <= 20.
ProjectionResult project_cone_bruteforce(const Vector& y, const ConeSpec& cone);

namespace detail {

/// min ||target - G b||^2 over b >= 0 (Lawson-Hanson style active set).
/// Entering variable: most positive dual, lowest index on ties.  Returns the
/// coefficient vector; `active` receives the indices with b_j > 0.
Vector nnls(const Matrix& G, const Vector& target, std::vector<int>& active,
            int maxIter);

}  // namespace detail

}  // namespace conetest
