#pragma once

#include <utility>
#include <vector>

#include "conetest/cone.hpp"

namespace conetest {

/// A coordinate-wise dominance order on design points, reduced to its cover
/// pairs.  orientation(j) = -1 flips the comparison on coordinate j.
struct PartialOrderSpec {
  Matrix points;                              // n x d
  Eigen::VectorXi orientation;                // entries in {+1,-1}
  std::vector<std::pair<int, int>> coverPairs;  // (i,j) with x_i covered by x_j
  bool connected = false;
};

/// The 2^d isotonic cones of a d-dimensional design, ordered so that
/// cones[j] and cones[2^d-1-j] are negations of each other.
struct OrientationFamily {
  std::vector<ConeSpec> cones;
  std::vector<bool> connected;  // per cone; negation pairs share a flag

  bool anyConnected() const {
    for (bool c : connected)
      if (c) return true;
    return false;
  }
};

/// Monotone (non-decreasing) cone on n ordered values: the first-difference
/// constraint matrix, null space spanned by the constant vector.
ConeSpec build_monotone(int n);

/// Convex cone at strictly increasing design points: second divided
/// differences non-negative, null space spanned by {1, x}.
ConeSpec build_convex(const Vector& x);

/// Cone of non-negative third derivative at strictly increasing points:
/// third divided differences non-negative, null space {1, x, x^2}.
ConeSpec build_third_derivative(const Vector& x);

/// Isotonic cone for the coordinate-wise partial order on `points` under the
/// given orientation.  One constraint row per cover pair after transitive
/// reduction.  Throws ConeError when the comparability graph is disconnected
/// (the null space then exceeds the constants).
std::pair<ConeSpec, PartialOrderSpec> build_partial_order(
    const Matrix& points, const Eigen::VectorXi& orientation);

/// All 2^d orientations of the isotonic cone (double / quadruple / octuple
/// family).  Disconnected orientations are flagged rather than dropped;
/// throws only if every orientation is disconnected.
OrientationFamily build_orientation_family(const Matrix& points);

/// Additive composition: each component cone lives in R^n on its own
/// predictor; the composite family has one cone per sign pattern, generated
/// by the union of (signed) component generators projected off the joint
/// null space L = S_1 + ... + S_d + span(Z) with one shared intercept.
/// Throws ConeError when the stacked null bases and Z are not jointly
/// independent (the identifiability condition).
std::vector<ConeSpec> build_additive(const std::vector<ConeSpec>& components,
                                     const Matrix* Z = nullptr);

}  // namespace conetest
