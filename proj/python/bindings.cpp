#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "conetest/builders.hpp"
#include "conetest/convex_multi.hpp"
#include "conetest/engine.hpp"
#include "conetest/extensions.hpp"
#include "conetest/projection.hpp"

namespace py = pybind11;
using namespace conetest;

namespace {

NullMode parse_mode(const std::string& s) {
  if (s == "known-gaussian") return NullMode::KnownGaussian;
  if (s == "bootstrap") return NullMode::Bootstrap;
  throw ConeError("null mode must be 'known-gaussian' or 'bootstrap'");
}

Dataset make_dataset(const Matrix& x, const Vector& y,
                     const std::optional<Matrix>& Z) {
  Dataset d;
  d.x = x;
  d.y = y;
  d.Z = Z ? *Z : Matrix(y.size(), 0);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Shape-constrained goodness-of-fit tests (double-cone "
            "alternatives)";

  py::register_exception<ConeError>(m, "ConeError");

  py::class_<ConeSpec>(m, "ConeSpec")
      .def_readonly("A", &ConeSpec::A)
      .def_readonly("B", &ConeSpec::B)
      .def_readonly("null_basis", &ConeSpec::nullBasis)
      .def_property_readonly(
          "generators",
          [](const ConeSpec& c) {
            return c.generators ? py::cast(*c.generators) : py::none();
          })
      .def_readonly("label", &ConeSpec::label)
      .def("__repr__", [](const ConeSpec& c) {
        return "<ConeSpec '" + c.label + "' n=" + std::to_string(c.dim()) +
               " m=" + std::to_string(c.A.rows()) + ">";
      });

  py::class_<ProjectionResult>(m, "ProjectionResult")
      .def_readonly("fit", &ProjectionResult::fit)
      .def_readonly("sse", &ProjectionResult::sse)
      .def_readonly("active_generators", &ProjectionResult::activeGenerators)
      .def_readonly("kkt_inner_product", &ProjectionResult::kktInnerProduct)
      .def_readonly("max_dual_violation", &ProjectionResult::maxDualViolation);

  py::class_<NullDistribution>(m, "NullDistribution")
      .def_readonly("samples", &NullDistribution::samples)
      .def_readonly("seed", &NullDistribution::seed)
      .def_readonly("nsim", &NullDistribution::nsim)
      .def("critical_value", &NullDistribution::critical_value)
      .def("p_value", &NullDistribution::p_value);

  py::class_<TestOutcome>(m, "TestOutcome")
      .def_readonly("T", &TestOutcome::T)
      .def_readonly("components", &TestOutcome::components)
      .def_readonly("argmax_cone", &TestOutcome::argmaxCone)
      .def_readonly("argmax_label", &TestOutcome::argmaxLabel)
      .def_readonly("p_value", &TestOutcome::pValue)
      .def_readonly("critical_value", &TestOutcome::criticalValue)
      .def_readonly("alpha", &TestOutcome::alpha)
      .def_readonly("sse0", &TestOutcome::sse0)
      .def_readonly("fit_s", &TestOutcome::fitS)
      .def_readonly("cone_fits", &TestOutcome::coneFits)
      .def_readonly("reject", &TestOutcome::reject)
      .def("__repr__", [](const TestOutcome& o) {
        return "<TestOutcome T=" + std::to_string(o.T) +
               " p=" + std::to_string(o.pValue) + ">";
      });

  py::class_<ConvexFit>(m, "ConvexFit")
      .def_readonly("theta", &ConvexFit::theta)
      .def_readonly("subgradients", &ConvexFit::subgradients)
      .def_readonly("sse", &ConvexFit::sse)
      .def_readonly("max_primal_violation", &ConvexFit::maxPrimalViolation)
      .def_readonly("iterations", &ConvexFit::iterations);

  m.def("build_monotone", &build_monotone, py::arg("n"));
  m.def("build_convex", &build_convex, py::arg("x"));
  m.def("build_third_derivative", &build_third_derivative, py::arg("x"));
  m.def("negate_cone", &negate_cone, py::arg("cone"));
  m.def(
      "build_partial_order",
      [](const Matrix& points, const Eigen::VectorXi& orientation) {
        auto [cone, order] = build_partial_order(points, orientation);
        return py::make_tuple(cone, order.coverPairs, order.connected);
      },
      py::arg("points"), py::arg("orientation"));

  m.def("project_subspace", &project_subspace, py::arg("y"), py::arg("basis"));
  m.def("project_cone", &project_cone, py::arg("y"), py::arg("cone"));
  m.def(
      "project_isotonic_pava",
      [](const Vector& y, const std::optional<Vector>& w) {
        return project_isotonic_pava(y, w ? *w : Vector::Ones(y.size()));
      },
      py::arg("y"), py::arg("weights") = py::none());
  m.def("project_cone_bruteforce", &project_cone_bruteforce, py::arg("y"),
        py::arg("cone"));

  m.def(
      "statistic",
      [](const Vector& y, const std::vector<ConeSpec>& family,
         const Matrix& nullBasis) { return statistic_T(y, family, nullBasis); },
      py::arg("y"), py::arg("cone_family"), py::arg("null_basis"));

  m.def("simulate_null_known_g", &simulate_null_knownG, py::arg("cone_family"),
        py::arg("null_basis"), py::arg("nsim"), py::arg("seed"));
  m.def("standardized_residuals", &standardized_residuals, py::arg("y"),
        py::arg("null_basis"));
  m.def("simulate_null_bootstrap", &simulate_null_bootstrap,
        py::arg("cone_family"), py::arg("null_basis"), py::arg("residuals"),
        py::arg("nsim"), py::arg("seed"));

  m.def(
      "run_test",
      [](const Vector& y, const std::vector<ConeSpec>& family,
         const Matrix& nullBasis, double alpha, int nsim, std::uint64_t seed,
         const std::string& mode) {
        Dataset data = make_dataset(Matrix(y.size(), 0), y, std::nullopt);
        return run_test(data, family, nullBasis, alpha, nsim, seed,
                        parse_mode(mode));
      },
      py::arg("y"), py::arg("cone_family"), py::arg("null_basis"),
      py::arg("alpha") = 0.05, py::arg("nsim") = 10000, py::arg("seed") = 1,
      py::arg("null_mode") = "known-gaussian");

  m.def(
      "test_constant",
      [](const Matrix& x, const Vector& y, double alpha, int nsim,
         std::uint64_t seed) {
        return test_constant_multid(make_dataset(x, y, std::nullopt), alpha,
                                    nsim, seed);
      },
      py::arg("x"), py::arg("y"), py::arg("alpha") = 0.05,
      py::arg("nsim") = 10000, py::arg("seed") = 1,
      "Constant-mean test against the 2^d orientation family");

  m.def(
      "test_partial_linear",
      [](const Vector& x, const Vector& y, const std::optional<Matrix>& Z,
         const std::string& nullKind, double alpha, int nsim,
         std::uint64_t seed) {
        NullKind kind;
        if (nullKind == "constant") kind = NullKind::Constant;
        else if (nullKind == "linear") kind = NullKind::Linear;
        else if (nullKind == "quadratic") kind = NullKind::Quadratic;
        else throw ConeError("null_kind must be constant|linear|quadratic");
        Dataset d = make_dataset(x, y, Z);
        return test_partial_linear(d, kind, alpha, nsim, seed);
      },
      py::arg("x"), py::arg("y"), py::arg("Z") = py::none(),
      py::arg("null_kind") = "linear", py::arg("alpha") = 0.05,
      py::arg("nsim") = 10000, py::arg("seed") = 1);

  py::class_<ConvexFitOptions>(m, "ConvexFitOptions")
      .def(py::init<>())
      .def_readwrite("tolerance", &ConvexFitOptions::tolerance)
      .def_readwrite("max_iterations", &ConvexFitOptions::maxIterations)
      .def_readwrite("rho", &ConvexFitOptions::rho);

  m.def("fit_convex", &fit_convex, py::arg("points"), py::arg("y"),
        py::arg("L") = py::none(), py::arg("options") = ConvexFitOptions{});
  m.def("fit_concave", &fit_concave, py::arg("points"), py::arg("y"),
        py::arg("L") = py::none(), py::arg("options") = ConvexFitOptions{});

  m.def(
      "test_affine",
      [](const Matrix& points, const Vector& y, std::optional<double> L,
         double alpha, int nsim, std::uint64_t seed) {
        const NullDistribution null =
            simulate_null_convex(points, L, nsim, seed);
        return test_affine_multid(points, y, L, null, alpha);
      },
      py::arg("points"), py::arg("y"), py::arg("L") = py::none(),
      py::arg("alpha") = 0.05, py::arg("nsim") = 1000, py::arg("seed") = 1,
      "Affine goodness-of-fit against the convex/concave double cone");

  m.attr("__version__") = "0.1.0";
}
