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

#ifndef KNGSYNTH_UTILITY_HPP_
#define KNGSYNTH_UTILITY_HPP_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kngsynth/dataset.hpp"
#include "kngsynth/glm.hpp"
#include "kngsynth/panel.hpp"

namespace kngsynth {

struct PmseResult {
  double pmse = 0.0;
  std::string classifier;  // "logistic" or "lasso(lambda)"
};

// Propensity-score MSE of a logistic membership classifier fitted to the
// stacked datasets (features standardized on the stack; all pairwise
// products added when `interactions` is set). Always in [0, 0.25].
PmseResult Pmse(const Dataset& original, const Dataset& synthetic, bool interactions,
                std::uint64_t seed = 0);

// 1-D Wasserstein-1 distance between two empirical distributions.
double Wasserstein1(std::span<const double> a, std::span<const double> b);
// Mean over columns of the 1-D W1 distance.
double ColumnMeanW1(const Dataset& a, const Dataset& b);

enum class WrtNull {
  // Distances after one swap of a random row between two identical copies of
  // the original.
  kSingleSwap,
  // Distances between random equal halves of the pooled datasets.
  kPermutation,
};

struct WrtResult {
  double ratio = 0.0;
  double distance = 0.0;
  double null_median = 0.0;
  bool resampled = false;  // synthetic rows were resampled to match n
};

// distance(original, synthetic) / median of the null distances. A zero
// distance gives ratio 0; a zero null median with a positive distance gives
// +inf. Warns when n_swaps < 100.
WrtResult WassersteinRatio(const Dataset& original, const Dataset& synthetic, int n_swaps,
                           std::uint64_t seed, WrtNull null = WrtNull::kSingleSwap);

struct KMarginalResult {
  double score = 1000.0;
  double total_difference = 0.0;  // mean over subsets when k < #columns
  bool merged_edges = false;      // some original column had duplicate bin edges
};

// Six bins per column from the original's Min, Q1, Median, Q3 and Max; the
// score is 1000 (2 - L1) / 2 over all 6^k bin combinations. Uses every column
// when k equals the column count, else averages 10 random k-subsets.
KMarginalResult KMarginal(const Dataset& original, const Dataset& synthetic, std::size_t k,
                          std::uint64_t seed);
// Bin index in [0, 6) of v against edges {Min, Q1, Median, Q3, Max}.
int KMarginalBin(double v, const std::array<double, 5>& edges);
std::array<double, 5> KMarginalEdges(std::span<const double> column);

struct LinearModel {
  std::string response;
  std::vector<std::string> predictors;
};

// |theta_orig - theta_syn| / SE(theta_orig) per coefficient (intercept
// first); +inf where the original SE is zero.
std::vector<double> StdCoefDiff(const Dataset& original, const Dataset& synthetic,
                                const LinearModel& model);

// OLS fitted on train, RMSE on test divided by the test response's sample
// sd. Throws DataError on a zero test sd.
double Nrmse(const Dataset& train, const Dataset& test, const LinearModel& model);

// Per-year panel series from the second year on. Rates are NaN where the
// denominator is zero.
struct YearValue {
  int year = 0;
  double value = 0.0;
  bool operator==(const YearValue&) const = default;
};

std::vector<YearValue> GrossEmployment(const std::vector<PanelRecord>& panel);
std::vector<YearValue> JobCreationRate(const std::vector<PanelRecord>& panel);
std::vector<YearValue> JobDestructionRate(const std::vector<PanelRecord>& panel);
std::vector<YearValue> NetJobCreationRate(const std::vector<PanelRecord>& panel);

struct UtilityReport {
  std::string method;
  double pmse_woi = 0.0;
  double pmse_wi = 0.0;
  std::string classifier_woi;
  std::string classifier_wi;
  double wrt_ratio = 0.0;
  double km_score = 0.0;
  std::vector<double> coef_diffs;
  std::vector<double> nrmse;

  // Flat (name, value) view in column order used by the CSV writers.
  std::vector<std::pair<std::string, double>> Values() const;
  static std::string CsvHeader(std::size_t n_coef, std::size_t n_nrmse);
  std::string CsvRow() const;
  std::string Text() const;
};

}  // namespace kngsynth

#endif  // KNGSYNTH_UTILITY_HPP_
