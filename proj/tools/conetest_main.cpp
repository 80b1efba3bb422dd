#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "conetest/builders.hpp"
#include "conetest/convex_multi.hpp"
#include "conetest/csv.hpp"
#include "conetest/extensions.hpp"
#include "conetest/scenarios.hpp"

using json = nlohmann::ordered_json;
using namespace conetest;

namespace {

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

json cone_to_json(const ConeSpec& cone) {
  json j;
  j["label"] = cone.label;
  j["A"] = matrix_to_json(cone.A);
  j["B"] = matrix_to_json(cone.B);
  j["nullBasis"] = matrix_to_json(cone.nullBasis);
  j["generators"] =
      cone.generators ? matrix_to_json(*cone.generators) : json(nullptr);
  return j;
}

json validation_to_json(const ValidationReport& report) {
  json j;
  j["a1Holds"] = report.a1Holds;
  switch (report.a2CertifiedBy) {
    case ValidationReport::A2Certificate::PairwiseGram:
      j["a2CertifiedBy"] = "pairwise-gram";
      break;
    case ValidationReport::A2Certificate::NumericProjection:
      j["a2CertifiedBy"] = "numeric-projection";
      break;
    default:
      j["a2CertifiedBy"] = "failed";
  }
  j["spanningHolds"] = report.spanningHolds;
  if (!report.allPass())
    j["warning"] =
        "assumption validation failed; the test ran but its unbiasedness "
        "guarantee is advisory only";
  return j;
}

json outcome_to_json(const TestOutcome& out, int nsim, std::uint64_t seed) {
  json j;
  j["schemaVersion"] = 1;
  j["T"] = out.T;
  j["components"] = out.components;
  j["argmaxCone"] = out.argmaxLabel;
  j["pValue"] = out.pValue;
  j["criticalValue"] = out.criticalValue;
  j["alpha"] = out.alpha;
  j["nsim"] = nsim;
  j["seed"] = seed;
  j["provenance"] =
      out.nullProvenance == NullProvenance::KnownG ? "known-G" : "bootstrap";
  j["reject"] = out.reject;
  return j;
}

Vector response_vector(const std::string& dataPath,
                       const std::string& response) {
  ColumnSpec spec;
  spec.response = response;
  return ingest_csv(dataPath, spec).y;
}

struct CommonFlags {
  std::string data;
  std::string response = "y";
  double alpha = 0.05;
  int nsim = 10000;
  std::uint64_t seed = 1;
  std::string nullMode = "known-gaussian";
  std::string cacheDir;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool withNullMode = true) {
  cmd->add_option("--data", f.data, "CSV file with a header row")->required();
  cmd->add_option("--response", f.response, "response column name");
  cmd->add_option("--alpha", f.alpha, "test level");
  cmd->add_option("--nsim", f.nsim, "Monte Carlo null sample size");
  cmd->add_option("--seed", f.seed, "simulation seed");
  if (withNullMode)
    cmd->add_option("--null", f.nullMode,
                    "null distribution: known-gaussian | bootstrap");
  cmd->add_option("--cache-dir", f.cacheDir,
                  "directory for null-distribution cache files");
}

NullMode parse_null_mode(const std::string& s) {
  if (s == "known-gaussian") return NullMode::KnownGaussian;
  if (s == "bootstrap") return NullMode::Bootstrap;
  throw CLI::ValidationError("--null must be known-gaussian or bootstrap");
}

// run_test with the optional file-backed cache around the null simulation.
TestOutcome run_with_cache(const CommonFlags& f, const Dataset& data,
                           const std::vector<ConeSpec>& family,
                           const Matrix& nullBasis) {
  const NullMode mode = parse_null_mode(f.nullMode);
  if (f.cacheDir.empty())
    return run_test(data, family, nullBasis, f.alpha, f.nsim, f.seed, mode);

  Vector residuals;
  const Vector* residPtr = nullptr;
  if (mode == NullMode::Bootstrap) {
    residuals = standardized_residuals(data.y, nullBasis);
    residPtr = &residuals;
  }
  const std::uint64_t hash =
      cone_set_hash(family, nullBasis, mode, residPtr, f.nsim, f.seed);
  std::filesystem::create_directories(f.cacheDir);
  char name[64];
  std::snprintf(name, sizeof name, "null_%016llx.bin",
                static_cast<unsigned long long>(hash));
  const std::string path = f.cacheDir + "/" + name;

  std::optional<NullDistribution> cached = load_null_distribution(path, hash);
  if (!cached) {
    if (mode == NullMode::KnownGaussian) {
      cached = simulate_null_knownG(family, nullBasis, f.nsim, f.seed);
    } else {
      cached = simulate_null_bootstrap(family, nullBasis, residuals, f.nsim,
                                       f.seed);
    }
    save_null_distribution(*cached, path);
  }
  return run_test(data, family, nullBasis, f.alpha, f.nsim, f.seed, mode,
                  &*cached);
}

int cmd_doubconetest(const CommonFlags& f, const std::string& amatPath,
                     bool dumpCone) {
  const Matrix A = read_matrix_csv(amatPath);
  const Vector y = response_vector(f.data, f.response);
  if (A.cols() != y.size())
    throw ConeError("constraint matrix has " + std::to_string(A.cols()) +
                    " columns but data has " + std::to_string(y.size()) +
                    " rows");

  ConeSpec cone;
  cone.label = "user";
  cone.A = A;
  cone.B = Matrix(0, A.cols());
  cone.nullBasis = null_space_basis(A);
  std::string fallbackNote;
  try {
    cone.generators = compute_generators(cone);
  } catch (const ConeError& e) {
    fallbackNote = e.what();
  }

  const ValidationReport report = validate_assumptions(cone);
  Dataset data;
  data.y = y;
  data.x = Matrix(y.size(), 0);
  data.Z = Matrix(y.size(), 0);
  const TestOutcome out =
      run_with_cache(f, data, {cone, negate_cone(cone)}, cone.nullBasis);

  json j = outcome_to_json(out, f.nsim, f.seed);
  j["validation"] = validation_to_json(report);
  if (!fallbackNote.empty()) j["validation"]["projection"] = fallbackNote;
  if (dumpCone) j["cone"] = cone_to_json(cone);
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_agconst(const CommonFlags& f, const std::vector<std::string>& preds) {
  if (preds.empty() || preds.size() > 3)
    throw ConeError("agconst supports 1 to 3 predictors");
  ColumnSpec spec;
  spec.response = f.response;
  spec.predictors = preds;
  const Dataset data = ingest_csv(f.data, spec);

  const OrientationFamily family = build_orientation_family(data.x);
  std::vector<ConeSpec> usable;
  int skipped = 0;
  for (size_t i = 0; i < family.cones.size(); ++i) {
    if (family.connected[i]) {
      usable.push_back(family.cones[i]);
    } else {
      ++skipped;
    }
  }
  const TestOutcome out =
      run_with_cache(f, data, usable, usable.front().nullBasis);
  json j = outcome_to_json(out, f.nsim, f.seed);
  j["cones"] = usable.size();
  if (skipped > 0) j["disconnectedOrientations"] = skipped;
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_partlintest(const CommonFlags& f, const std::string& predictor,
                    const std::vector<std::string>& covariates,
                    const std::string& nullKind, const std::string& errors) {
  ColumnSpec spec;
  spec.response = f.response;
  spec.predictors = {predictor};
  spec.covariates = covariates;
  const Dataset data = ingest_csv(f.data, spec);

  NullKind kind;
  if (nullKind == "constant") {
    kind = NullKind::Constant;
  } else if (nullKind == "linear") {
    kind = NullKind::Linear;
  } else if (nullKind == "quadratic") {
    kind = NullKind::Quadratic;
  } else {
    throw ConeError("--null must be constant, linear or quadratic");
  }

  ConeSpec cone = build_null_kind_cone(data.x.col(0), kind);
  if (data.Z.cols() > 0) cone = build_partial_linear(cone, data.Z);
  CommonFlags g = f;
  g.nullMode = errors;
  const TestOutcome out = run_with_cache(
      g, data, {cone, negate_cone(cone)}, cone.nullBasis);
  json j = outcome_to_json(out, f.nsim, f.seed);
  j["nullModel"] = nullKind;
  j["covariateColumns"] = data.Z.cols();
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_convextest(const CommonFlags& f, const std::vector<std::string>& preds,
                   double lipschitz, bool lipschitzAuto) {
  ColumnSpec spec;
  spec.response = f.response;
  spec.predictors = preds;
  const Dataset data = ingest_csv(f.data, spec);

  std::optional<double> L;
  if (lipschitzAuto) {
    L = default_lipschitz_bound(data.x, data.y);
  } else if (lipschitz > 0.0) {
    L = lipschitz;
  }
  const NullDistribution null =
      simulate_null_convex(data.x, L, f.nsim, f.seed);
  const TestOutcome out = test_affine_multid(data.x, data.y, L, null, f.alpha);
  json j = outcome_to_json(out, f.nsim, f.seed);
  j["lipschitz"] = L ? json(*L) : json(nullptr);
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_power(const ExperimentSpec& spec, const std::string& outPath) {
  const std::vector<PowerRow> rows = run_power_study(spec);
  std::ostringstream csv;
  csv << "scenario,n,a,power,se\n";
  for (const auto& r : rows) {
    char line[160];
    std::snprintf(line, sizeof line, "%s,%d,%.10g,%.6f,%.6f\n",
                  r.scenario.c_str(), r.n, r.a, r.power, r.se);
    csv << line;
  }
  if (!outPath.empty()) {
    std::ofstream out(outPath);
    if (!out) throw ConeError("cannot write " + outPath);
    out << csv.str();
  }
  std::cout << csv.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Goodness-of-fit tests against shape-constrained double-cone "
      "alternatives"};
  app.require_subcommand(1);

  CommonFlags dc, ag, pl, cv;
  std::string amatPath;
  bool dumpCone = false;
  std::vector<std::string> agPreds, cvPreds, plCovariates;
  std::string plPredictor, plNull = "linear", plErrors = "known-gaussian";
  double cvLipschitz = 0.0;
  bool cvLipschitzAuto = false;

  auto* doub = app.add_subcommand(
      "doubconetest", "Test that E[y] lies in the null space of a user cone");
  add_common(doub, dc);
  doub->add_option("--amat", amatPath, "CSV of the constraint matrix A")
      ->required();
  doub->add_flag("--dump-cone", dumpCone, "include the cone in the report");

  auto* agc = app.add_subcommand(
      "agconst", "Test a constant mean against monotone-in-each-predictor");
  add_common(agc, ag);
  agc->add_option("--predictors", agPreds, "predictor columns (up to 3)")
      ->required()
      ->delimiter(',');

  auto* plt = app.add_subcommand(
      "partlintest", "Linear vs partial-linear test with covariates");
  add_common(plt, pl, /*withNullMode=*/false);
  plt->add_option("--predictor", plPredictor, "predictor column")->required();
  plt->add_option("--covariates", plCovariates, "covariate columns")
      ->delimiter(',');
  plt->add_option("--null", plNull, "null model: constant | linear | quadratic");
  plt->add_option("--errors", plErrors,
                  "error law for the null simulation: known-gaussian | "
                  "bootstrap");

  auto* cvx = app.add_subcommand(
      "convextest", "Affine mean against the convex/concave alternative");
  add_common(cvx, cv);
  cvx->add_option("--predictors", cvPreds, "predictor columns")
      ->required()
      ->delimiter(',');
  cvx->add_option("--lipschitz", cvLipschitz,
                  "uniform subgradient bound L (> 0)");
  cvx->add_flag("--lipschitz-auto", cvLipschitzAuto,
                "use the 10*range(y)/min-distance heuristic for L");

  ExperimentSpec ps;
  std::string powerOut, effectGridText = "0,1";
  bool listScenarios = false;
  auto* pow = app.add_subcommand("power", "Reproducible power study");
  pow->add_option("--scenario", ps.scenario, "scenario name");
  pow->add_option("--n", ps.n, "sample size");
  pow->add_option("--sigma", ps.sigma, "error standard deviation");
  pow->add_option("--effect-grid", effectGridText,
                  "comma-separated effect sizes");
  pow->add_option("--replications", ps.replications, "datasets per grid point");
  pow->add_option("--nsim", ps.nsim, "null simulation size");
  pow->add_option("--alpha", ps.alpha, "test level");
  pow->add_option("--seed", ps.seed, "seed");
  pow->add_option("--out", powerOut, "also write the CSV table here");
  pow->add_flag("--list-scenarios", listScenarios,
                "print the scenario catalog and exit");

  CLI11_PARSE(app, argc, argv);

  try {
    if (doub->parsed()) return cmd_doubconetest(dc, amatPath, dumpCone);
    if (agc->parsed()) return cmd_agconst(ag, agPreds);
    if (plt->parsed())
      return cmd_partlintest(pl, plPredictor, plCovariates, plNull, plErrors);
    if (cvx->parsed())
      return cmd_convextest(cv, cvPreds, cvLipschitz, cvLipschitzAuto);
    if (pow->parsed()) {
      if (listScenarios) {
        json catalog = json::array();
        for (const auto& s : list_scenarios()) {
          json j;
          j["name"] = s.name;
          j["truth"] = s.truth;
          j["null"] = s.nullModel;
          j["alternative"] = s.alternative;
          j["fixedDesign"] = s.fixedDesign;
          catalog.push_back(j);
        }
        std::cout << catalog.dump(2) << "\n";
        return 0;
      }
      if (ps.scenario.empty())
        throw ConeError("power needs --scenario (see --list-scenarios)");
      std::stringstream ss(effectGridText);
      std::string tok;
      ps.effectGrid.clear();
      while (std::getline(ss, tok, ',')) ps.effectGrid.push_back(std::stod(tok));
      return cmd_power(ps, powerOut);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
