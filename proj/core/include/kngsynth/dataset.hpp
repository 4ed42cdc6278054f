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

#ifndef KNGSYNTH_DATASET_HPP_
#define KNGSYNTH_DATASET_HPP_

#include <Eigen/Dense>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kngsynth {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Column-oriented numeric table. Every column has the same length n >= 1 and
// no missing (NaN) values; both are checked on construction. Immutable once
// built; the "with_" members return modified copies.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<std::string> names, std::vector<std::vector<double>> columns);

  std::size_t rows() const { return columns_.empty() ? 0 : columns_.front().size(); }
  std::size_t cols() const { return columns_.size(); }
  bool empty() const { return columns_.empty(); }

  const std::vector<std::string>& names() const { return names_; }
  bool has_column(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;  // throws DataError

  std::span<const double> column(std::size_t j) const { return columns_.at(j); }
  std::span<const double> column(std::string_view name) const {
    return columns_[index_of(name)];
  }
  Vector column_vector(std::string_view name) const;

  // Replaces the named column, or appends it when absent.
  Dataset with_column(std::string name, std::vector<double> values) const;
  Dataset select_columns(const std::vector<std::string>& names) const;
  Dataset select_rows(std::span<const std::size_t> rows) const;

  bool operator==(const Dataset&) const = default;

 private:
  std::vector<std::string> names_;
  std::vector<std::vector<double>> columns_;
};

// Per-column privacy and clamping bounds. cx_bound is the Euclidean bound
// on a design-matrix row used by the sensitivity; the outcome bounds clamp
// the response and act as soft bounds for the sampler.
struct ColumnBounds {
  double cx_bound = 1.0;
  double outcome_lower = -std::numeric_limits<double>::infinity();
  double outcome_upper = std::numeric_limits<double>::infinity();

  void Validate() const;  // throws ConfigError
  bool operator==(const ColumnBounds&) const = default;
};

// Clamps to [outcome_lower, outcome_upper]: min with the upper bound first,
// then max with the lower bound.
std::vector<double> Winsorize(std::span<const double> column, const ColumnBounds& bounds);

// n x k design matrix; first column all ones when `intercept` is set, then
// the predictors in the order given.
Matrix BuildDesignMatrix(const Dataset& data, const std::vector<std::string>& predictors,
                         bool intercept = true);

// Rescales the non-intercept part of each row so the full row has Euclidean
// norm <= cx_bound. Rows already inside the ball are untouched. With an
// intercept column the predictor part is capped at sqrt(cx^2 - 1).
Matrix ClipRowNorms(const Matrix& design, double cx_bound, bool intercept = true);

// CSV: header row, comma separated, '.' decimal point, no quoting. Values
// are written in shortest round-trip form so Load(Write(d)) == d.
Dataset ParseCsv(std::string_view text);
std::string FormatCsv(const Dataset& data);
Dataset LoadCsv(const std::filesystem::path& path);
void WriteCsv(const Dataset& data, const std::filesystem::path& path);

// Shortest representation that parses back to the same double.
std::string FormatDouble(double value);
// Strict full-field parse; returns false on any trailing garbage.
bool ParseDouble(std::string_view field, double& out);

// Shared descriptive statistics.
double Mean(std::span<const double> v);
double SampleSd(std::span<const double> v);  // n - 1 denominator
// Linear-interpolation quantile on sorted data (Hyndman-Fan type 7).
double SortedQuantile(std::span<const double> sorted, double p);
double Iqr(std::span<const double> v);
// Robust spread used for step sizes and smoothing widths: sample sd, or 1
// when the data are constant.
double Scale(std::span<const double> v);

}  // namespace kngsynth

#endif  // KNGSYNTH_DATASET_HPP_
