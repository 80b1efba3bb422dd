// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failures.  Every tolerance is pinned here, not tuned at runtime.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "conetest/builders.hpp"
#include "conetest/convex_multi.hpp"
#include "conetest/engine.hpp"
#include "conetest/extensions.hpp"
#include "conetest/projection.hpp"
#include "conetest/rng.hpp"
#include "conetest/scenarios.hpp"

using namespace conetest;

namespace {

int g_failures = 0;

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

void report(int criterion, bool pass, const std::string& detail,
            double seconds) {
  std::printf("[%s] criterion %2d: %s (%.1fs)\n", pass ? "PASS" : "FAIL",
              criterion, detail.c_str(), seconds);
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::vector<ConeSpec> double_cone(const ConeSpec& cone) {
  return {cone, negate_cone(cone)};
}

Vector normal_vector(int n, CounterRng& rng) {
  Vector y(n);
  for (int i = 0; i < n; ++i) y(i) = rng.next_normal();
  return y;
}

Vector spaced(int n) {
  Vector x(n);
  for (int i = 0; i < n; ++i) x(i) = static_cast<double>(i) / (n - 1);
  return x;
}

char buf[256];

// 1. Exact level (monotone double cone, n=50, alpha=.05, nsim=2000,
//    2000 replications): rejection rate within .05 +/- .015, under 2 minutes.
void criterion1() {
  Timer timer;
  const int n = 50, nsim = 2000, reps = 2000;
  const auto family = double_cone(build_monotone(n));
  const NullDistribution null =
      simulate_null_knownG(family, family[0].nullBasis, nsim, 101);
  const double cv = null.critical_value(0.05);
  int rejections = 0;
  for (int r = 0; r < reps; ++r) {
    CounterRng rng(102, r);
    if (statistic_value(normal_vector(n, rng), family, family[0].nullBasis) >
        cv)
      ++rejections;
  }
  const double rate = static_cast<double>(rejections) / reps;
  const bool pass =
      std::fabs(rate - 0.05) <= 0.015 && timer.seconds() < 120.0;
  std::snprintf(buf, sizeof buf, "exact level: rate=%.4f target .05+-.015",
                rate);
  report(1, pass, buf, timer.seconds());
}

// 2. Power reproduction for the sinusoid: .16/.53/.98 at n=50/100/200 +/- .05.
void criterion2() {
  Timer timer;
  const double targets[3] = {0.16, 0.53, 0.98};
  const int sizes[3] = {50, 100, 200};
  bool pass = true;
  std::string detail = "sinusoid power";
  for (int k = 0; k < 3; ++k) {
    ExperimentSpec spec;
    spec.scenario = "sinusoid";
    spec.n = sizes[k];
    spec.effectGrid = {1.0};
    spec.replications = 2000;
    spec.nsim = 20000;
    spec.seed = 2100 + k;
    const double power = run_power_study(spec)[0].power;
    pass = pass && std::fabs(power - targets[k]) <= 0.05;
    std::snprintf(buf, sizeof buf, " n=%d: %.3f (target %.2f)", sizes[k],
                  power, targets[k]);
    detail += buf;
  }
  report(2, pass, detail, timer.seconds());
}

// 3. Power reproduction for the cubic: .77 at n=50, .99 at n=100 +/- .05.
void criterion3() {
  Timer timer;
  const double targets[2] = {0.77, 0.99};
  const int sizes[2] = {50, 100};
  bool pass = true;
  std::string detail = "cubic power";
  for (int k = 0; k < 2; ++k) {
    ExperimentSpec spec;
    spec.scenario = "cubic";
    spec.n = sizes[k];
    spec.effectGrid = {1.0};
    spec.replications = 2000;
    spec.nsim = 20000;
    spec.seed = 3100 + k;
    const double power = run_power_study(spec)[0].power;
    pass = pass && std::fabs(power - targets[k]) <= 0.05;
    std::snprintf(buf, sizeof buf, " n=%d: %.3f (target %.2f)", sizes[k],
                  power, targets[k]);
    detail += buf;
  }
  report(3, pass, detail, timer.seconds());
}

// 4. Oracle equivalence on n <= 6: 200 random y per built-in cone, 1e-8.
void criterion4() {
  Timer timer;
  double worst = 0.0;
  CounterRng rng(41, 0);
  for (int which = 0; which < 3; ++which) {
    ConeSpec cone;
    if (which == 0) {
      cone = build_monotone(6);
    } else if (which == 1) {
      cone = build_convex(spaced(6));
    } else {
      cone = build_third_derivative(spaced(6));
    }
    for (int t = 0; t < 200; ++t) {
      const Vector y = normal_vector(6, rng);
      const ProjectionResult main = project_cone(y, cone);
      const ProjectionResult oracle = project_cone_bruteforce(y, cone);
      worst = std::max(worst, (main.fit - oracle.fit).cwiseAbs().maxCoeff());
    }
  }
  std::snprintf(buf, sizeof buf, "oracle equivalence: max error %.2e <= 1e-8",
                worst);
  report(4, worst <= 1e-8, buf, timer.seconds());
}

// 5. PAVA/NNLS agreement on 100 random instances, n <= 50, 1e-10.
void criterion5() {
  Timer timer;
  double worst = 0.0;
  CounterRng rng(51, 0);
  for (int t = 0; t < 100; ++t) {
    const int n = 2 + static_cast<int>(rng.next_below(49));
    ConeSpec cone = build_monotone(n);
    cone.fastPath = FastPath::None;  // force the generator path
    const Vector y = normal_vector(n, rng);
    const Vector pava = project_isotonic_pava(y, Vector::Ones(n));
    const ProjectionResult nnls = project_cone(y, cone);
    worst = std::max(worst, (pava - nnls.fit).cwiseAbs().maxCoeff());
  }
  std::snprintf(buf, sizeof buf, "pava/nnls agreement: max %.2e <= 1e-10",
                worst);
  report(5, worst <= 1e-10, buf, timer.seconds());
}

// 6. KKT certification on 500 random instances (projections + convex fits).
void criterion6() {
  Timer timer;
  bool pass = true;
  CounterRng rng(61, 0);
  int done = 0;
  for (int t = 0; t < 420; ++t, ++done) {
    const int n = 4 + static_cast<int>(rng.next_below(40));
    ConeSpec cone;
    switch (t % 4) {
      case 0: cone = build_monotone(n); break;
      case 1: cone = build_convex(spaced(n)); break;
      case 2: cone = build_third_derivative(spaced(std::max(n, 5))); break;
      default: {
        ConeSpec mono = build_monotone(n);
        mono.fastPath = FastPath::None;
        cone = mono;
      }
    }
    const Vector y = normal_vector(cone.dim(), rng);
    const ProjectionResult p = project_cone(y, cone);
    const bool ok =
        std::fabs(p.kktInnerProduct) <= 1e-8 * std::max(1.0, y.squaredNorm()) &&
        p.maxDualViolation <= 1e-8 * std::max(1.0, y.norm());
    pass = pass && ok;
  }
  ConvexFitOptions opt;
  opt.maxIterations = 60000;  // bounded fits with binding balls have no
                              // exact finisher and need the longer tail
  for (int t = 0; t < 80; ++t, ++done) {
    const int n = 6 + static_cast<int>(rng.next_below(7));
    const int d = 1 + static_cast<int>(rng.next_below(2));
    Matrix x(n, d);
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < d; ++c) x(i, c) = rng.next_uniform();
    const Vector y = normal_vector(n, rng);
    const bool withL = t % 2 == 0;
    const ConvexFit fit =
        fit_convex(x, y, withL ? std::optional<double>(2.0) : std::nullopt,
                   opt);
    const double tol = 2e-6 * (1.0 + y.norm());
    bool ok = fit.maxPrimalViolation <= tol;
    if (withL)
      for (int j = 0; j < n; ++j)
        ok = ok && fit.subgradients.row(j).norm() <= 2.0 + tol;
    pass = pass && ok;
  }
  std::snprintf(buf, sizeof buf,
                "KKT certificates hold on %d random instances", done);
  report(6, pass, buf, timer.seconds());
}

// 7. Invariance laws at 1e-9 on 200 random draws.
void criterion7() {
  Timer timer;
  double worst = 0.0;
  CounterRng rng(71, 0);
  for (int t = 0; t < 200; ++t) {
    const int n = 6 + static_cast<int>(rng.next_below(20));
    const ConeSpec cone =
        t % 2 == 0 ? build_monotone(n) : build_convex(spaced(n));
    const auto family = double_cone(cone);
    const Vector y = normal_vector(n, rng);
    const double base = statistic_value(y, family, cone.nullBasis);
    Vector beta(cone.nullBasis.cols());
    for (Eigen::Index j = 0; j < beta.size(); ++j)
      beta(j) = 3.0 * rng.next_normal();
    const double shifted = statistic_value(y + cone.nullBasis * beta, family,
                                           cone.nullBasis);
    const double scaled = statistic_value((0.2 + 2.0 * rng.next_uniform()) * y,
                                          family, cone.nullBasis);
    worst = std::max({worst, std::fabs(shifted - base),
                      std::fabs(scaled - base)});
  }
  std::snprintf(buf, sizeof buf, "invariance: max |dT| = %.2e <= 1e-9", worst);
  report(7, worst <= 1e-9, buf, timer.seconds());
}

// 8. Bootstrap consistency: |c05_boot - c05_known| decreasing in n and <= .01
//    at n=200 (nsim=4000, Gaussian truth).
void criterion8() {
  Timer timer;
  double gaps[2] = {0.0, 0.0};
  const int sizes[2] = {50, 200};
  for (int k = 0; k < 2; ++k) {
    const int n = sizes[k];
    const auto family = double_cone(build_monotone(n));
    CounterRng rng(81, k);
    const Vector y = normal_vector(n, rng);
    const Vector resid = standardized_residuals(y, family[0].nullBasis);
    const NullDistribution knownNull =
        simulate_null_knownG(family, family[0].nullBasis, 4000, 82);
    const NullDistribution bootNull = simulate_null_bootstrap(
        family, family[0].nullBasis, resid, 4000, 83);
    gaps[k] = std::fabs(knownNull.critical_value(0.05) -
                        bootNull.critical_value(0.05));
  }
  const bool pass = gaps[1] < gaps[0] && gaps[1] <= 0.01;
  std::snprintf(buf, sizeof buf,
                "bootstrap c05 gap: n=50 %.4f -> n=200 %.4f (<= .01)",
                gaps[0], gaps[1]);
  report(8, pass, buf, timer.seconds());
}

// 9. Empirical unbiasedness: rejection rate under an Omega_I shift at least
//    the level minus 2 Monte Carlo standard errors, for 3 magnitudes.
void criterion9() {
  Timer timer;
  const int n = 30, nsim = 1000, reps = 1000;
  const auto family = double_cone(build_monotone(n));
  const NullDistribution null =
      simulate_null_knownG(family, family[0].nullBasis, nsim, 91);
  const double cv = null.critical_value(0.05);
  Vector shape = spaced(n);
  shape.array() -= shape.mean();  // centered increasing vector in Omega_I
  const double mcse = std::sqrt(0.05 * 0.95 / reps);
  bool pass = true;
  std::string detail = "unbiasedness rates:";
  for (const double mag : {0.3, 0.8, 1.5}) {
    int rejections = 0;
    for (int r = 0; r < reps; ++r) {
      CounterRng rng(92 + static_cast<int>(mag * 10), r);
      const Vector y = mag * shape + normal_vector(n, rng);
      if (statistic_value(y, family, family[0].nullBasis) > cv) ++rejections;
    }
    const double rate = static_cast<double>(rejections) / reps;
    pass = pass && rate >= 0.05 - 2.0 * mcse;
    std::snprintf(buf, sizeof buf, " %.2f", rate);
    detail += buf;
  }
  std::snprintf(buf, sizeof buf, " (floor %.4f)", 0.05 - 2.0 * mcse);
  detail += buf;
  report(9, pass, detail, timer.seconds());
}

// 10. Null rate behavior: median T strictly decreasing over n = 25/50/100/200
//     and n*median/log n within a factor of 3 across the grid.
void criterion10() {
  Timer timer;
  const int sizes[4] = {25, 50, 100, 200};
  double medians[4], scaled[4];
  for (int k = 0; k < 4; ++k) {
    const int n = sizes[k];
    const auto family = double_cone(build_monotone(n));
    const NullDistribution null =
        simulate_null_knownG(family, family[0].nullBasis, 4000, 110 + k);
    medians[k] = null.samples[2000];
    scaled[k] = n * medians[k] / std::log(n);
  }
  bool decreasing = medians[0] > medians[1] && medians[1] > medians[2] &&
                    medians[2] > medians[3];
  const double lo = *std::min_element(scaled, scaled + 4);
  const double hi = *std::max_element(scaled, scaled + 4);
  const bool pass = decreasing && hi / lo <= 3.0;
  std::snprintf(buf, sizeof buf,
                "null rate: medians %.4f/%.4f/%.4f/%.4f, n*med/log n ratio "
                "%.2f <= 3",
                medians[0], medians[1], medians[2], medians[3], hi / lo);
  report(10, pass, buf, timer.seconds());
}

// 11. Multivariate convex, d=1 reduction at 1e-6 on 50 random instances, and
//     Lipschitz monotonicity of the fit error.
void criterion11() {
  Timer timer;
  CounterRng rng(111, 0);
  ConvexFitOptions tight;
  tight.tolerance = 1e-9;
  tight.maxIterations = 300000;
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const int n = 8 + static_cast<int>(rng.next_below(5));
    Vector x(n);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      acc += 0.1 + rng.next_uniform();
      x(i) = acc;
    }
    const Vector y = normal_vector(n, rng);
    const ConvexFit qp = fit_convex(x, y, std::nullopt, tight);
    const ProjectionResult poly = project_cone(y, build_convex(x));
    worst = std::max(worst, (qp.theta - poly.fit).cwiseAbs().maxCoeff());
  }
  bool monotone = true;
  ConvexFitOptions opt;
  opt.tolerance = 1e-7;
  opt.maxIterations = 200000;  // tightly bound subgradients converge slowly
                               // and have no exact finisher
  for (int t = 0; t < 12; ++t) {
    const int n = 10;
    Matrix x(n, 2);
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < 2; ++c) x(i, c) = rng.next_uniform();
    const Vector y = 2.0 * normal_vector(n, rng);
    double prev = -1.0;
    for (const double L : {0.25, 1.0, 4.0, 16.0}) {
      const double sse = fit_convex(x, y, L, opt).sse;
      if (prev >= 0.0 && sse > prev + 1e-6) monotone = false;
      prev = sse;
    }
  }
  const bool pass = worst <= 1e-6 && monotone;
  std::snprintf(buf, sizeof buf,
                "d=1 QP vs polyhedral: max %.2e <= 1e-6; sse(L) monotone: %s",
                worst, monotone ? "yes" : "no");
  report(11, pass, buf, timer.seconds());
}

// 12. Scale statement: full 10,000 x 10,000 reference studies and external
//     real-data analyses are not reproduced by default; the property suites
//     above substitute, and the power CLI exposes full-scale flags.
void criterion12() {
  Timer timer;
  const bool defaultsAreDeskScale =
      ExperimentSpec{}.replications == 2000 && ExperimentSpec{}.nsim == 2000;
  report(12, defaultsAreDeskScale,
         "full-scale studies are opt-in via --replications/--nsim; desk-scale "
         "defaults verified",
         timer.seconds());
}

}  // namespace

int main() {
  std::printf("acceptance suite (alpha-level tolerances pinned in source)\n");
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  criterion9();
  criterion10();
  criterion11();
  criterion12();
  if (g_failures == 0) {
    std::printf("all criteria passed\n");
  } else {
    std::printf("%d criteria FAILED\n", g_failures);
  }
  return g_failures;
}
