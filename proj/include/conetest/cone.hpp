#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace conetest {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Thrown when a precondition of the statistical machinery is violated
/// (rank-deficient constraints, disconnected designs, degenerate data, ...).
class ConeError : public std::runtime_error {
 public:
  explicit ConeError(const std::string& what) : std::runtime_error(what) {}
};

/// Hint for projection routines that a cone admits an exact special-purpose
/// algorithm.  IsotonicAscending/Descending mark the complete-order monotone
/// cone, where pool-adjacent-violators replaces the active-set solve.
enum class FastPath { None, IsotonicAscending, IsotonicDescending };

/// A polyhedral cone {theta : A theta >= 0, B theta = 0} together with the
/// null space S of its constraints and the generators of Omega = cone ∩ S-perp.
///
/// Cones produced by the builders always carry an orthonormal nullBasis and,
/// when the constraint matrix has full row rank, a generator matrix whose
/// j-th column delta_j solves A delta_j = e_j, B delta_j = 0 with minimal
/// norm.  Composite cones (partial-linear lifts, additive families) are
/// generator-defined: A is empty and the cone is S + cone(generators).
struct ConeSpec {
  Matrix A;                       // m x n inequality rows; may have 0 rows
  Matrix B;                       // q x n equality rows; may have 0 rows
  Matrix nullBasis;               // n x k, orthonormal columns spanning S
  std::optional<Matrix> generators;  // n x M, columns delta_1..delta_M
  std::string label;
  FastPath fastPath = FastPath::None;

  int dim() const { return static_cast<int>(nullBasis.rows()); }
  int numGenerators() const {
    return generators ? static_cast<int>(generators->cols()) : 0;
  }
  bool generatorDefined() const { return A.rows() == 0 && generators; }
};

/// Outcome of checking the structural assumptions behind the test: S is the
/// largest linear subspace of the cone (A1), the cone and its negation are
/// mutually polar off S (A2), and S plus the generators span R^n.
struct ValidationReport {
  enum class A2Certificate { PairwiseGram, NumericProjection, Failed };

  bool a1Holds = false;
  A2Certificate a2CertifiedBy = A2Certificate::Failed;
  bool spanningHolds = false;
  std::vector<std::pair<int, int>> violatedPairs;  // Gram entries < -tol
  std::vector<int> violatedIndices;                // generators failing checks

  bool allPass() const {
    return a1Holds && spanningHolds &&
           a2CertifiedBy != A2Certificate::Failed;
  }
};

/// Relative tolerance used for rank decisions and null-space extraction.
inline constexpr double kRankTolerance = 1e-10;

/// Orthonormal basis of {theta : A theta = 0, B theta = 0}.
/// Columns are sign-canonicalized (largest-magnitude entry positive) so the
/// result is reproducible.  Throws ConeError when the null space is {0}.
Matrix null_space_basis(const Matrix& A, const Matrix* B = nullptr);

/// Generators of Omega = cone ∩ S-perp for a full-row-rank constraint system:
/// column j is the minimal-norm solution of A delta = e_j, B delta = 0.
/// Throws ConeError on rank-deficient constraints.
Matrix compute_generators(const ConeSpec& cone);

/// Checks (A1), (A2) and the spanning condition.  Never throws; failures are
/// reported, with the cheap pairwise-Gram certificate attempted before the
/// numeric projection fallback.
ValidationReport validate_assumptions(const ConeSpec& cone);

/// The opposite cone D = -I: inequality rows and generators negated, the
/// null space unchanged.
ConeSpec negate_cone(const ConeSpec& cone);

/// Orthonormalizes the columns of M (rank-revealing, sign-canonicalized).
/// Returns an n x r matrix with r = rank(M).
Matrix orthonormal_columns(const Matrix& m);

/// Verifies the internal consistency of a ConeSpec (null basis annihilated by
/// the constraints, generators feasible and orthogonal to S).  Returns the
/// largest violation found; used by tests and the CLI's validation report.
double cone_consistency_error(const ConeSpec& cone);

}  // namespace conetest
