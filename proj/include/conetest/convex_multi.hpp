#pragma once

#include <optional>

#include "conetest/engine.hpp"

namespace conetest {

/// Least-squares fit over evaluations of convex functions, with optional
/// uniform bound L on the subgradient norms.
struct ConvexFit {
  Vector theta;
  Matrix subgradients;          // n x d, row j is the subgradient at x_j
  double sse = 0.0;
  double maxPrimalViolation = 0.0;
  std::optional<double> lipschitzBound;
  int iterations = 0;
};

struct ConvexFitOptions {
  double tolerance = 1e-6;  // scaled by (1 + ||y||) inside the solver
  int maxIterations = 20000;
  double rho = 1.0;         // initial ADMM penalty; adapted by balancing
};

/// Projection onto the convex cone of Example-3 type: operator splitting over
/// the n(n-1) coupling constraints theta_j + <x_i - x_j, xi_j> <= theta_i,
/// with per-row clipping of the subgradients onto the L-ball when L is given.
/// The solution is unique in theta; convergence is certified by primal and
/// dual residuals below tolerance * (1 + ||y||).  Throws ConeError with
/// residual diagnostics when the iteration cap is reached.
ConvexFit fit_convex(const Matrix& points, const Vector& y,
                     std::optional<double> L = std::nullopt,
                     const ConvexFitOptions& options = {});

/// Concave fit via negation: theta = -fit_convex(points, -y, L).theta.
ConvexFit fit_concave(const Matrix& points, const Vector& y,
                      std::optional<double> L = std::nullopt,
                      const ConvexFitOptions& options = {});

/// Heuristic default for the Lipschitz bound: 10 * range(y) / smallest
/// pairwise design distance.
double default_lipschitz_bound(const Matrix& points, const Vector& y);

/// Null distribution of the convex/concave statistic for this design and L.
NullDistribution simulate_null_convex(const Matrix& points,
                                      std::optional<double> L, int nsim,
                                      std::uint64_t seed,
                                      const ConvexFitOptions& options = {});

/// Goodness-of-fit of the affine model against the convex/concave double
/// cone: T = max(||fitS - fitI||^2, ||fitS - fitD||^2) / SSE0, with the
/// p-value read from nullSim (which must have been simulated with the same
/// points, L and affine null space).
TestOutcome test_affine_multid(const Matrix& points, const Vector& y,
                               std::optional<double> L,
                               const NullDistribution& nullSim, double alpha,
                               const ConvexFitOptions& options = {});

/// Affine null space span{1, x_1, ..., x_d} as an orthonormal basis.
Matrix affine_null_basis(const Matrix& points);

}  // namespace conetest
