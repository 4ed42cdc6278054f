// Copyright 2026 The kngsynth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "kngsynth/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "kngsynth/error.hpp"

namespace kngsynth {

Dataset::Dataset(std::vector<std::string> names, std::vector<std::vector<double>> columns)
    : names_(std::move(names)), columns_(std::move(columns)) {
  if (names_.size() != columns_.size()) {
    throw DataError("dataset: " + std::to_string(names_.size()) + " names for " +
                    std::to_string(columns_.size()) + " columns");
  }
  if (columns_.empty()) throw DataError("dataset: no columns");
  const std::size_t n = columns_.front().size();
  if (n == 0) throw DataError("dataset: zero rows");
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    if (columns_[j].size() != n) {
      throw DataError("dataset: column " + names_[j] + " has " +
                      std::to_string(columns_[j].size()) + " rows, expected " +
                      std::to_string(n));
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (std::isnan(columns_[j][i])) {
        throw DataError("missing value row " + std::to_string(i + 1) + " col " + names_[j]);
      }
    }
    for (std::size_t k = 0; k < j; ++k) {
      if (names_[k] == names_[j]) throw DataError("dataset: duplicate column " + names_[j]);
    }
  }
}

bool Dataset::has_column(std::string_view name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::size_t Dataset::index_of(std::string_view name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw DataError("unknown column " + std::string(name));
  return static_cast<std::size_t>(it - names_.begin());
}

Vector Dataset::column_vector(std::string_view name) const {
  auto c = column(name);
  return Eigen::Map<const Vector>(c.data(), static_cast<Eigen::Index>(c.size()));
}

Dataset Dataset::with_column(std::string name, std::vector<double> values) const {
  auto names = names_;
  auto cols = columns_;
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) {
    names.push_back(std::move(name));
    cols.push_back(std::move(values));
  } else {
    cols[static_cast<std::size_t>(it - names.begin())] = std::move(values);
  }
  return Dataset(std::move(names), std::move(cols));
}

Dataset Dataset::select_columns(const std::vector<std::string>& names) const {
  std::vector<std::vector<double>> cols;
  cols.reserve(names.size());
  for (const auto& n : names) cols.push_back(columns_[index_of(n)]);
  return Dataset(names, std::move(cols));
}

Dataset Dataset::select_rows(std::span<const std::size_t> rows) const {
  std::vector<std::vector<double>> cols(columns_.size());
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    cols[j].reserve(rows.size());
    for (std::size_t r : rows) cols[j].push_back(columns_[j].at(r));
  }
  return Dataset(names_, std::move(cols));
}

void ColumnBounds::Validate() const {
  if (!(cx_bound > 0.0) || !std::isfinite(cx_bound)) {
    throw ConfigError("bounds: cx_bound must be positive and finite");
  }
  if (!(outcome_lower < outcome_upper)) {
    throw ConfigError("bounds: outcome_lower must be < outcome_upper");
  }
}

std::vector<double> Winsorize(std::span<const double> column, const ColumnBounds& bounds) {
  std::vector<double> out(column.begin(), column.end());
  for (double& v : out) v = std::max(std::min(v, bounds.outcome_upper), bounds.outcome_lower);
  return out;
}

Matrix BuildDesignMatrix(const Dataset& data, const std::vector<std::string>& predictors,
                         bool intercept) {
  const auto n = static_cast<Eigen::Index>(data.rows());
  const auto k = static_cast<Eigen::Index>(predictors.size() + (intercept ? 1 : 0));
  Matrix x(n, k);
  Eigen::Index j = 0;
  if (intercept) x.col(j++).setOnes();
  for (const auto& name : predictors) {
    auto c = data.column(name);
    x.col(j++) = Eigen::Map<const Vector>(c.data(), n);
  }
  return x;
}

Matrix ClipRowNorms(const Matrix& design, double cx_bound, bool intercept) {
  Matrix out = design;
  const Eigen::Index start = intercept ? 1 : 0;
  const Eigen::Index width = design.cols() - start;
  if (width <= 0) return out;
  const double cap2 = cx_bound * cx_bound - (intercept ? 1.0 : 0.0);
  if (cap2 <= 0.0) {
    out.rightCols(width).setZero();
    return out;
  }
  const double cap = std::sqrt(cap2);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double norm = out.row(i).tail(width).norm();
    if (norm > cap) out.row(i).tail(width) *= cap / norm;
  }
  return out;
}

std::string FormatDouble(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

bool ParseDouble(std::string_view field, double& out) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
    field.remove_suffix(1);
  }
  if (field.empty()) return false;
  if (field.front() == '+') field.remove_prefix(1);
  auto res = std::from_chars(field.data(), field.data() + field.size(), out);
  return res.ec == std::errc() && res.ptr == field.data() + field.size();
}

namespace {

std::vector<std::string_view> SplitLine(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return std::string(s);
}

}  // namespace

Dataset ParseCsv(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto pos = text.find('\n', start);
    auto line = text.substr(start, pos == std::string_view::npos ? std::string_view::npos
                                                                  : pos - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw DataError("empty file");

  std::vector<std::string> names;
  for (auto cell : SplitLine(lines.front())) names.push_back(Trim(cell));
  for (const auto& n : names) {
    if (n.empty()) throw DataError("empty column name in header");
  }
  if (lines.size() == 1) throw DataError("no data rows");

  std::vector<std::vector<double>> cols(names.size());
  for (std::size_t r = 1; r < lines.size(); ++r) {
    auto cells = SplitLine(lines[r]);
    if (cells.size() != names.size()) {
      throw DataError("ragged row " + std::to_string(r) + ": expected " +
                      std::to_string(names.size()) + " cells, got " +
                      std::to_string(cells.size()));
    }
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const std::string cell = Trim(cells[j]);
      if (cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan") {
        throw DataError("missing value row " + std::to_string(r) + " col " + names[j]);
      }
      double v = 0.0;
      if (!ParseDouble(cell, v)) {
        throw DataError("non-numeric cell row " + std::to_string(r) + " col " + names[j]);
      }
      cols[j].push_back(v);
    }
  }
  return Dataset(std::move(names), std::move(cols));
}

std::string FormatCsv(const Dataset& data) {
  std::string out;
  const auto& names = data.names();
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (j) out += ',';
    out += names[j];
  }
  out += '\n';
  for (std::size_t i = 0; i < data.rows(); ++i) {
    for (std::size_t j = 0; j < data.cols(); ++j) {
      if (j) out += ',';
      out += FormatDouble(data.column(j)[i]);
    }
    out += '\n';
  }
  return out;
}

Dataset LoadCsv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ParseCsv(ss.str());
}

void WriteCsv(const Dataset& data, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << FormatCsv(data);
}

double Mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double SampleSd(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = Mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double SortedQuantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw DataError("quantile of empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double Iqr(std::span<const double> v) {
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end());
  return SortedQuantile(s, 0.75) - SortedQuantile(s, 0.25);
}

double Scale(std::span<const double> v) {
  const double sd = SampleSd(v);
  return sd > 0.0 ? sd : 1.0;
}

}  // namespace kngsynth
