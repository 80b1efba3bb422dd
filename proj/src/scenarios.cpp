#include "conetest/scenarios.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>

#include "conetest/builders.hpp"
#include "conetest/convex_multi.hpp"
#include "conetest/extensions.hpp"
#include "conetest/rng.hpp"

namespace conetest {

namespace {

Vector equally_spaced(int n) {
  Vector x(n);
  for (int i = 0; i < n; ++i)
    x(i) = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
  return x;
}

double ramp(double x, double a) {
  const double t = x - 2.0 / 3.0;
  return t > 0.0 ? 10.0 * a * t * t : 0.0;
}

// Three-level categorical covariate, independent of x: levels drawn
// uniformly, dummy-coded against level 1, additive effects (1, 2).
Matrix random_covariate(int n, CounterRng& rng, Vector& effect) {
  Matrix Z = Matrix::Zero(n, 2);
  effect = Vector::Zero(n);
  for (int i = 0; i < n; ++i) {
    const auto level = rng.next_below(3);
    if (level >= 1) {
      Z(i, level - 1) = 1.0;
      effect(i) = static_cast<double>(level);
    }
  }
  return Z;
}

struct FixedScenario {
  std::function<double(double, double)> truth;  // (x, a) -> mean
  NullKind kind;
};

bool run_fixed_design(const ExperimentSpec& spec, const FixedScenario& sc,
                      std::vector<PowerRow>& rows) {
  const Vector x = equally_spaced(spec.n);
  const ConeSpec cone = build_null_kind_cone(x, sc.kind);
  const std::vector<ConeSpec> family{cone, negate_cone(cone)};
  const NullDistribution null = simulate_null_knownG(
      family, cone.nullBasis, spec.nsim, spec.seed ^ 0xA5A5A5A5A5A5A5A5ULL);
  const double cv = null.critical_value(spec.alpha);

  for (size_t ai = 0; ai < spec.effectGrid.size(); ++ai) {
    const double a = spec.effectGrid[ai];
    std::atomic<int> rejections{0};
    parallel_for(spec.replications, [&](int rep) {
      CounterRng rng(spec.seed,
                     (static_cast<std::uint64_t>(ai) << 32) | rep);
      Vector y(spec.n);
      for (int i = 0; i < spec.n; ++i)
        y(i) = sc.truth(x(i), a) + spec.sigma * rng.next_normal();
      const double t = statistic_value(y, family, cone.nullBasis);
      if (t > cv) rejections.fetch_add(1);
    });
    const double p = static_cast<double>(rejections) / spec.replications;
    rows.push_back({spec.scenario, spec.n, a, p,
                    std::sqrt(p * (1.0 - p) / spec.replications)});
  }
  return true;
}

// Replication body returning reject/not for the random-design scenarios.
using ReplicationFn = std::function<bool(int aIdx, double a, int rep)>;

void run_random_design(const ExperimentSpec& spec, const ReplicationFn& fn,
                       std::vector<PowerRow>& rows) {
  for (size_t ai = 0; ai < spec.effectGrid.size(); ++ai) {
    const double a = spec.effectGrid[ai];
    std::atomic<int> rejections{0};
    parallel_for(spec.replications, [&](int rep) {
      if (fn(static_cast<int>(ai), a, rep)) rejections.fetch_add(1);
    });
    const double p = static_cast<double>(rejections) / spec.replications;
    rows.push_back({spec.scenario, spec.n, a, p,
                    std::sqrt(p * (1.0 - p) / spec.replications)});
  }
}

std::uint64_t rep_stream(int aIdx, int rep) {
  return (static_cast<std::uint64_t>(aIdx) << 32) |
         static_cast<std::uint64_t>(rep);
}

std::uint64_t rep_null_seed(const ExperimentSpec& spec, int aIdx, int rep) {
  return spec.seed ^ (0x517CC1B727220A95ULL + rep_stream(aIdx, rep));
}

}  // namespace

const std::vector<ScenarioInfo>& list_scenarios() {
  static const std::vector<ScenarioInfo> catalog = {
      {"ramp", "10a(x-2/3)+^2", "constant mean",
       "monotone double cone", true},
      {"sinusoid", "a sin(3 pi x)", "constant mean",
       "monotone double cone", true},
      {"cubic", "4 - 6x + 40a(x-1/2)^3", "affine mean",
       "convex/concave double cone", true},
      {"exp-vs-quadratic", "a exp(3x-2)", "quadratic mean",
       "third-derivative double cone", true},
      {"model1", "2 + 5x1 - x2 + a x1 x2, x uniform on [0,1]^2",
       "affine mean", "multivariate convex/concave double cone", false},
      {"model2",
       "x1 + a x2^2 + 2 x4; (x1,x2,x3) normal corr .5, x4 Bernoulli(.4)",
       "linear in x1..x3 and x4", "additive octuple cone, x4 as covariate",
       false},
      {"partial-linear-quad", "3a x^2 + x + z effect (3-level categorical)",
       "affine in x plus covariates", "lifted convex/concave double cone",
       false},
      {"partial-linear-cubic", "20a(x-1/2)^3 + x + z effect",
       "affine in x plus covariates", "lifted convex/concave double cone",
       false},
      {"const-cov-linear", "a x + z effect", "constant plus covariates",
       "lifted monotone double cone", false},
      {"const-cov-sine", "a sin(3 pi x) + z effect",
       "constant plus covariates", "lifted monotone double cone", false},
      {"multid-product", "2a x1 x2, x uniform on [0,1]^2", "constant mean",
       "quadruple isotonic cone", false},
      {"multid-quadratic", "8a(x1-1/2)^2, x uniform on [0,1]^2",
       "constant mean", "quadruple isotonic cone", false},
      {"multid-plateau", "10a((x1-2/3)+^2 + (x2-2/3)+^2), x uniform",
       "constant mean", "quadruple isotonic cone", false},
  };
  return catalog;
}

std::vector<PowerRow> run_power_study(const ExperimentSpec& spec) {
  if (spec.effectGrid.empty()) throw ConeError("empty effect grid");
  if (spec.replications < 1) throw ConeError("replications must be positive");
  std::vector<PowerRow> rows;
  const int n = spec.n;
  const double sigma = spec.sigma;

  if (spec.scenario == "ramp") {
    run_fixed_design(spec, {[](double x, double a) { return ramp(x, a); },
                            NullKind::Constant}, rows);
  } else if (spec.scenario == "sinusoid") {
    run_fixed_design(
        spec,
        {[](double x, double a) { return a * std::sin(3.0 * M_PI * x); },
         NullKind::Constant},
        rows);
  } else if (spec.scenario == "cubic") {
    run_fixed_design(
        spec,
        {[](double x, double a) {
           const double t = x - 0.5;
           return 4.0 - 6.0 * x + 40.0 * a * t * t * t;
         },
         NullKind::Linear},
        rows);
  } else if (spec.scenario == "exp-vs-quadratic") {
    run_fixed_design(
        spec,
        {[](double x, double a) { return a * std::exp(3.0 * x - 2.0); },
         NullKind::Quadratic},
        rows);
  } else if (spec.scenario == "model1") {
    run_random_design(
        spec,
        [&](int ai, double a, int rep) {
          CounterRng rng(spec.seed, rep_stream(ai, rep));
          Matrix x(n, 2);
          Vector y(n);
          for (int i = 0; i < n; ++i) {
            x(i, 0) = rng.next_uniform();
            x(i, 1) = rng.next_uniform();
            y(i) = 2.0 + 5.0 * x(i, 0) - x(i, 1) + a * x(i, 0) * x(i, 1) +
                   sigma * rng.next_normal();
          }
          const NullDistribution null = simulate_null_convex(
              x, std::nullopt, spec.nsim, rep_null_seed(spec, ai, rep));
          const TestOutcome out = test_affine_multid(x, y, std::nullopt, null,
                                                     spec.alpha);
          return out.reject;
        },
        rows);
  } else if (spec.scenario == "model2") {
    run_random_design(
        spec,
        [&](int ai, double a, int rep) {
          CounterRng rng(spec.seed, rep_stream(ai, rep));
          Matrix x(n, 3);
          Matrix z(n, 1);
          Vector y(n);
          // Equicorrelated trio: common factor sqrt(.5) + idiosyncratic.
          for (int i = 0; i < n; ++i) {
            const double common = rng.next_normal();
            for (int c = 0; c < 3; ++c)
              x(i, c) = std::sqrt(0.5) * common +
                        std::sqrt(0.5) * rng.next_normal();
            z(i, 0) = rng.next_uniform() < 0.4 ? 1.0 : 0.0;
            y(i) = x(i, 0) + a * x(i, 1) * x(i, 1) + 2.0 * z(i, 0) +
                   sigma * rng.next_normal();
          }
          std::vector<ConeSpec> components;
          for (int c = 0; c < 3; ++c)
            components.push_back(
                build_null_kind_cone(x.col(c), NullKind::Linear));
          Dataset data{x, y, z, Vector(), {}};
          const TestOutcome out =
              test_additive(data, components, &z, spec.alpha, spec.nsim,
                            rep_null_seed(spec, ai, rep));
          return out.reject;
        },
        rows);
  } else if (spec.scenario == "partial-linear-quad" ||
             spec.scenario == "partial-linear-cubic" ||
             spec.scenario == "const-cov-linear" ||
             spec.scenario == "const-cov-sine") {
    const bool quad = spec.scenario == "partial-linear-quad";
    const bool cubic = spec.scenario == "partial-linear-cubic";
    const bool linTruth = spec.scenario == "const-cov-linear";
    const NullKind kind =
        (quad || cubic) ? NullKind::Linear : NullKind::Constant;
    run_random_design(
        spec,
        [&, quad, cubic, linTruth, kind](int ai, double a, int rep) {
          CounterRng rng(spec.seed, rep_stream(ai, rep));
          const Vector x = equally_spaced(n);
          Vector zeffect;
          Matrix Z = random_covariate(n, rng, zeffect);
          Vector y(n);
          for (int i = 0; i < n; ++i) {
            double mean;
            if (quad) {
              mean = 3.0 * a * x(i) * x(i) + x(i);
            } else if (cubic) {
              const double t = x(i) - 0.5;
              mean = 20.0 * a * t * t * t + x(i);
            } else if (linTruth) {
              mean = a * x(i);
            } else {
              mean = a * std::sin(3.0 * M_PI * x(i));
            }
            y(i) = mean + zeffect(i) + sigma * rng.next_normal();
          }
          Dataset data{Matrix(x), y, Z, Vector(), {}};
          const TestOutcome out =
              test_partial_linear(data, kind, spec.alpha, spec.nsim,
                                  rep_null_seed(spec, ai, rep));
          return out.reject;
        },
        rows);
  } else if (spec.scenario == "multid-product" ||
             spec.scenario == "multid-quadratic" ||
             spec.scenario == "multid-plateau") {
    const std::string which = spec.scenario;
    run_random_design(
        spec,
        [&, which](int ai, double a, int rep) {
          CounterRng rng(spec.seed, rep_stream(ai, rep));
          Matrix x(n, 2);
          Vector y(n);
          for (int i = 0; i < n; ++i) {
            x(i, 0) = rng.next_uniform();
            x(i, 1) = rng.next_uniform();
            double mean;
            if (which == "multid-product") {
              mean = 2.0 * a * x(i, 0) * x(i, 1);
            } else if (which == "multid-quadratic") {
              const double t = x(i, 0) - 0.5;
              mean = 8.0 * a * t * t;
            } else {
              mean = ramp(x(i, 0), a) + ramp(x(i, 1), a);
            }
            y(i) = mean + sigma * rng.next_normal();
          }
          Dataset data{x, y, Matrix(n, 0), Vector(), {}};
          const TestOutcome out = test_constant_multid(
              data, spec.alpha, spec.nsim, rep_null_seed(spec, ai, rep));
          return out.reject;
        },
        rows);
  } else {
    throw ConeError("unknown scenario: " + spec.scenario);
  }
  return rows;
}

}  // namespace conetest
