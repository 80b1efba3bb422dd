#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "conetest/engine.hpp"

namespace conetest {

/// A power-study configuration over a grid of effect sizes.
struct ExperimentSpec {
  std::string scenario;
  int n = 100;
  double sigma = 1.0;
  std::vector<double> effectGrid;
  int replications = 2000;
  int nsim = 2000;
  double alpha = 0.05;
  std::uint64_t seed = 1;
};

struct PowerRow {
  std::string scenario;
  int n = 0;
  double a = 0.0;
  double power = 0.0;
  double se = 0.0;
};

struct ScenarioInfo {
  std::string name;
  std::string truth;        // data-generating mean function
  std::string nullModel;    // what H0 asserts
  std::string alternative;  // cone family used
  bool fixedDesign = false; // null distribution reused across replications
};

const std::vector<ScenarioInfo>& list_scenarios();

/// Rejection proportion with binomial standard error for each effect size.
/// Fixed-design scenarios simulate the null once and reuse it; random-design
/// scenarios re-simulate per replication (documented as expensive).
std::vector<PowerRow> run_power_study(const ExperimentSpec& spec);

}  // namespace conetest
