#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "conetest/cone.hpp"
#include "conetest/projection.hpp"

namespace conetest {

/// Design, response and optional parametric covariates.
struct Dataset {
  Matrix x;                       // n x d design points
  Vector y;                       // n responses
  Matrix Z;                       // n x k covariates (0 columns when absent)
  Vector weights;                 // 0-length when absent
  std::vector<std::string> columnNames;

  int n() const { return static_cast<int>(y.size()); }
};

enum class NullProvenance { KnownG, Bootstrap };

/// Sorted Monte Carlo sample of the statistic under the null, bound to the
/// cone family and null space it was simulated for.
struct NullDistribution {
  std::vector<double> samples;  // ascending, each in [0,1]
  std::uint64_t seed = 0;
  int nsim = 0;
  NullProvenance provenance = NullProvenance::KnownG;
  std::uint64_t coneSetHash = 0;

  /// Empirical (1-alpha) quantile by order statistic (index
  /// ceil((1-alpha)(nsim+1)), clipped to the sample range).
  double critical_value(double alpha) const;
  /// Add-one p-value: (1 + #{samples >= t}) / (1 + nsim).
  double p_value(double t) const;
};

/// The test result: statistic, per-cone components, fits and decision inputs.
struct TestOutcome {
  double T = 0.0;
  std::vector<double> components;
  int argmaxCone = 0;
  std::string argmaxLabel;
  double pValue = 1.0;
  double criticalValue = 0.0;
  double alpha = 0.0;
  double sse0 = 0.0;
  Vector fitS;
  std::vector<Vector> coneFits;
  NullProvenance nullProvenance = NullProvenance::KnownG;
  bool reject = false;
};

/// T = max_j ||Pi(y|S) - Pi(y|C_j)||^2 / SSE0 over the cone family, which all
/// share the null space spanned by nullBasis.  p-value and critical value are
/// left unset.  Throws ConeError for y (numerically) inside S.
TestOutcome statistic_T(const Vector& y, const std::vector<ConeSpec>& coneFamily,
                        const Matrix& nullBasis);

/// Cheap variant for the simulation loop: only the statistic value.
double statistic_value(const Vector& y, const std::vector<ConeSpec>& coneFamily,
                       const Matrix& nullBasis);

/// Monte Carlo null distribution with errors drawn from G = standard normal.
/// Deterministic given seed; replicate i uses its own counter-based stream,
/// so the result is independent of the number of workers.
NullDistribution simulate_null_knownG(const std::vector<ConeSpec>& coneFamily,
                                      const Matrix& nullBasis, int nsim,
                                      std::uint64_t seed);

/// Residuals of y off span(nullBasis), centered and scaled to unit sample
/// standard deviation (divisor n).  Throws on zero residual variance.
Vector standardized_residuals(const Vector& y, const Matrix& nullBasis);

/// Null distribution with errors resampled (with replacement) from the given
/// standardized residuals.
NullDistribution simulate_null_bootstrap(const std::vector<ConeSpec>& coneFamily,
                                         const Matrix& nullBasis,
                                         const Vector& residuals, int nsim,
                                         std::uint64_t seed);

enum class NullMode { KnownGaussian, Bootstrap };

/// Full test: statistic, simulated null, p-value, critical value, decision.
TestOutcome run_test(const Dataset& data, const std::vector<ConeSpec>& coneFamily,
                     const Matrix& nullBasis, double alpha, int nsim,
                     std::uint64_t seed, NullMode mode,
                     const NullDistribution* cachedNull = nullptr);

/// Digest binding a null distribution to its cone family, null space, error
/// model and simulation size (FNV-1a over the canonical byte serialization).
std::uint64_t cone_set_hash(const std::vector<ConeSpec>& coneFamily,
                            const Matrix& nullBasis, NullMode mode,
                            const Vector* residuals, int nsim,
                            std::uint64_t seed);

/// Cache file round-trip (little-endian; header: magic, version, coneSetHash,
/// seed, nsim, provenance).
void save_null_distribution(const NullDistribution& dist,
                            const std::string& path);
std::optional<NullDistribution> load_null_distribution(
    const std::string& path, std::uint64_t expectedHash);

/// Worker cap honored by the simulation loops: CONETEST_THREADS when set,
/// otherwise the hardware concurrency.
int simulation_workers();

/// Runs fn(i) for i in [0, count) across the worker pool.  Each call must be
/// independent; used by the null simulators and the power study.
void parallel_for(int count, const std::function<void(int)>& fn);

}  // namespace conetest
