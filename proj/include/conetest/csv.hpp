#pragma once

#include <string>
#include <vector>

#include "conetest/engine.hpp"

namespace conetest {

/// Which named columns play which role.  Covariate columns containing any
/// non-numeric cell are treated as categorical and expanded to dummy columns
/// (reference level = first by sort order).
struct ColumnSpec {
  std::string response;
  std::vector<std::string> predictors;
  std::vector<std::string> covariates;
};

/// Reads a headered CSV into a Dataset.  Throws ConeError naming the row for
/// missing columns, empty cells, non-numeric values in numeric columns, and
/// NaN/Inf entries.
Dataset ingest_csv(const std::string& path, const ColumnSpec& spec);

/// Parses an unheadered numeric CSV into a matrix (used for --amat files).
Matrix read_matrix_csv(const std::string& path);

}  // namespace conetest
