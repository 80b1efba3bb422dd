#include "conetest/csv.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace conetest {

namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

std::vector<std::vector<std::string>> read_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConeError("cannot open file: " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    rows.push_back(split_line(line));
  }
  if (rows.empty()) throw ConeError("empty file: " + path);
  return rows;
}

}  // namespace

Matrix read_matrix_csv(const std::string& path) {
  const auto rows = read_rows(path);
  const size_t cols = rows.front().size();
  Matrix m(rows.size(), cols);
  for (size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols)
      throw ConeError(path + ": row " + std::to_string(r + 1) +
                      " has inconsistent column count");
    for (size_t c = 0; c < cols; ++c) {
      double v;
      if (!parse_double(rows[r][c], v) || !std::isfinite(v))
        throw ConeError(path + ": non-numeric cell at row " +
                        std::to_string(r + 1));
      m(r, c) = v;
    }
  }
  return m;
}

Dataset ingest_csv(const std::string& path, const ColumnSpec& spec) {
  const auto rows = read_rows(path);
  const auto& header = rows.front();
  const int n = static_cast<int>(rows.size()) - 1;
  if (n < 1) throw ConeError(path + ": no data rows");

  auto column_index = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw ConeError(path + ": missing column '" + name + "'");
    return static_cast<size_t>(it - header.begin());
  };

  auto cell_at = [&](int row, size_t col) -> const std::string& {
    const auto& r = rows[row + 1];
    if (col >= r.size() || r[col].empty())
      throw ConeError(path + ": empty cell in row " + std::to_string(row + 2) +
                      ", column '" + header[col] + "'");
    return r[col];
  };

  auto numeric_column = [&](const std::string& name) {
    const size_t col = column_index(name);
    Vector v(n);
    for (int i = 0; i < n; ++i) {
      double value;
      if (!parse_double(cell_at(i, col), value))
        throw ConeError(path + ": non-numeric value in row " +
                        std::to_string(i + 2) + ", column '" + name + "'");
      if (!std::isfinite(value))
        throw ConeError(path + ": non-finite value in row " +
                        std::to_string(i + 2) + ", column '" + name + "'");
      v(i) = value;
    }
    return v;
  };

  Dataset data;
  data.y = numeric_column(spec.response);
  data.x = Matrix(n, spec.predictors.size());
  for (size_t j = 0; j < spec.predictors.size(); ++j)
    data.x.col(j) = numeric_column(spec.predictors[j]);

  // Covariates: numeric columns pass through, categorical ones expand to
  // dummies against the first level in sort order.
  std::vector<Vector> zcols;
  std::vector<std::string> znames;
  for (const auto& name : spec.covariates) {
    const size_t col = column_index(name);
    bool numeric = true;
    for (int i = 0; i < n && numeric; ++i) {
      double tmp;
      if (!parse_double(cell_at(i, col), tmp)) numeric = false;
    }
    if (numeric) {
      zcols.push_back(numeric_column(name));
      znames.push_back(name);
      continue;
    }
    std::set<std::string> levels;
    for (int i = 0; i < n; ++i) levels.insert(cell_at(i, col));
    if (levels.size() < 2)
      throw ConeError(path + ": categorical column '" + name +
                      "' has a single level");
    auto it = levels.begin();
    ++it;  // reference level dropped
    for (; it != levels.end(); ++it) {
      Vector dummy(n);
      for (int i = 0; i < n; ++i) dummy(i) = cell_at(i, col) == *it ? 1.0 : 0.0;
      zcols.push_back(dummy);
      znames.push_back(name + "=" + *it);
    }
  }
  data.Z = Matrix(n, static_cast<Eigen::Index>(zcols.size()));
  for (size_t j = 0; j < zcols.size(); ++j)
    data.Z.col(static_cast<Eigen::Index>(j)) = zcols[j];

  data.columnNames.push_back(spec.response);
  data.columnNames.insert(data.columnNames.end(), spec.predictors.begin(),
                          spec.predictors.end());
  data.columnNames.insert(data.columnNames.end(), znames.begin(), znames.end());
  return data;
}

}  // namespace conetest
