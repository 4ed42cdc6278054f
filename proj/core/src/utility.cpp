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

#include "kngsynth/utility.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include "kngsynth/error.hpp"
#include "kngsynth/log.hpp"
#include "kngsynth/seeding.hpp"

namespace kngsynth {

namespace {

void RequireSameColumns(const Dataset& a, const Dataset& b, const char* what) {
  if (a.names() != b.names()) {
    throw DataError(std::string(what) + ": original and synthetic columns differ");
  }
  if (a.empty() || a.rows() == 0 || b.rows() == 0) {
    throw DataError(std::string(what) + ": empty dataset");
  }
}

std::vector<double> Sorted(std::span<const double> v) {
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end());
  return s;
}

}  // namespace

PmseResult Pmse(const Dataset& original, const Dataset& synthetic, bool interactions,
                std::uint64_t seed) {
  RequireSameColumns(original, synthetic, "pmse");
  const Eigen::Index n0 = static_cast<Eigen::Index>(original.rows());
  const Eigen::Index n1 = static_cast<Eigen::Index>(synthetic.rows());
  const Eigen::Index n = n0 + n1;

  std::vector<Vector> mains;
  for (std::size_t j = 0; j < original.cols(); ++j) {
    Vector v(n);
    const auto a = original.column(j);
    const auto b = synthetic.column(j);
    for (Eigen::Index i = 0; i < n0; ++i) v[i] = a[static_cast<std::size_t>(i)];
    for (Eigen::Index i = 0; i < n1; ++i) v[n0 + i] = b[static_cast<std::size_t>(i)];
    const double mean = v.mean();
    const double sd = std::sqrt((v.array() - mean).square().sum() / static_cast<double>(n));
    if (!(sd > 0.0)) continue;  // constant on the stack: carries no signal
    mains.push_back((v.array() - mean) / sd);
  }
  std::vector<Vector> features = mains;
  if (interactions) {
    for (std::size_t j = 0; j < mains.size(); ++j) {
      for (std::size_t l = j + 1; l < mains.size(); ++l) {
        features.push_back(mains[j].cwiseProduct(mains[l]));
      }
    }
  }
  Matrix x(n, static_cast<Eigen::Index>(features.size()) + 1);
  x.col(0).setOnes();
  for (std::size_t f = 0; f < features.size(); ++f) x.col(static_cast<Eigen::Index>(f) + 1) = features[f];
  Vector labels(n);
  labels.head(n0).setZero();
  labels.tail(n1).setOnes();

  const GlmFit fit = FitClassifierWithFallback(x, labels, seed);
  const Vector p = PredictProbability(x, fit.coefficients);
  const double c = static_cast<double>(n1) / static_cast<double>(n);
  PmseResult res;
  res.pmse = (p.array() - c).square().mean();
  res.classifier = fit.penalty.kind == PenaltyKind::kNone ? "logistic" : fit.penalty.ToString();
  return res;
}

double Wasserstein1(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DataError("wasserstein: empty sample");
  const std::vector<double> sa = Sorted(a);
  const std::vector<double> sb = Sorted(b);
  if (sa.size() == sb.size()) {
    double s = 0.0;
    for (std::size_t i = 0; i < sa.size(); ++i) s += std::abs(sa[i] - sb[i]);
    return s / static_cast<double>(sa.size());
  }
  // Integral of |F_a - F_b| over the merged support.
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double prev = std::min(sa.front(), sb.front());
  double total = 0.0;
  while (i < sa.size() || j < sb.size()) {
    const double next = j >= sb.size() || (i < sa.size() && sa[i] <= sb[j]) ? sa[i] : sb[j];
    total += std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb) * (next - prev);
    while (i < sa.size() && sa[i] == next) ++i;
    while (j < sb.size() && sb[j] == next) ++j;
    prev = next;
  }
  return total;
}

double ColumnMeanW1(const Dataset& a, const Dataset& b) {
  RequireSameColumns(a, b, "wasserstein");
  double s = 0.0;
  for (std::size_t j = 0; j < a.cols(); ++j) s += Wasserstein1(a.column(j), b.column(j));
  return s / static_cast<double>(a.cols());
}

namespace {

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return SortedQuantile(v, 0.5);
}

}  // namespace

WrtResult WassersteinRatio(const Dataset& original, const Dataset& synthetic, int n_swaps,
                           std::uint64_t seed, WrtNull null) {
  RequireSameColumns(original, synthetic, "wasserstein ratio");
  if (n_swaps < 1) throw ConfigError("wasserstein ratio: n_swaps must be positive");
  if (n_swaps < 100) {
    log::Warning("wasserstein ratio: " + std::to_string(n_swaps) +
                 " null draws give an unstable null median");
  }
  Rng rng = MakeRng(seed);
  WrtResult res;
  const std::size_t n = original.rows();
  Dataset syn = synthetic;
  if (synthetic.rows() != n) {
    std::uniform_int_distribution<std::size_t> pick(0, synthetic.rows() - 1);
    std::vector<std::size_t> rows(n);
    for (auto& r : rows) r = pick(rng);
    syn = synthetic.select_rows(rows);
    res.resampled = true;
  }
  res.distance = ColumnMeanW1(original, syn);

  std::vector<double> draws;
  draws.reserve(static_cast<std::size_t>(n_swaps));
  const std::size_t p = original.cols();
  if (null == WrtNull::kSingleSwap) {
    // Swapping row i of one copy with row j of the other moves mass
    // 1/n from x_i to x_j in one sample and back in the other, so each
    // column's W1 is 2 |x_i - x_j| / n.
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (int s = 0; s < n_swaps; ++s) {
      const std::size_t i = pick(rng);
      const std::size_t j = pick(rng);
      double d = 0.0;
      for (std::size_t c = 0; c < p; ++c) {
        const auto col = original.column(c);
        d += 2.0 * std::abs(col[i] - col[j]) / static_cast<double>(n);
      }
      draws.push_back(d / static_cast<double>(p));
    }
  } else {
    std::vector<std::size_t> idx(2 * n);
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<double> left(n);
    std::vector<double> right(n);
    for (int s = 0; s < n_swaps; ++s) {
      std::shuffle(idx.begin(), idx.end(), rng);
      double d = 0.0;
      for (std::size_t c = 0; c < p; ++c) {
        const auto a = original.column(c);
        const auto b = syn.column(c);
        auto val = [&](std::size_t k) { return k < n ? a[k] : b[k - n]; };
        for (std::size_t r = 0; r < n; ++r) {
          left[r] = val(idx[r]);
          right[r] = val(idx[n + r]);
        }
        d += Wasserstein1(left, right);
      }
      draws.push_back(d / static_cast<double>(p));
    }
  }
  res.null_median = Median(draws);
  if (res.distance == 0.0) {
    res.ratio = 0.0;
  } else if (res.null_median == 0.0) {
    res.ratio = std::numeric_limits<double>::infinity();
  } else {
    res.ratio = res.distance / res.null_median;
  }
  return res;
}

std::array<double, 5> KMarginalEdges(std::span<const double> column) {
  const std::vector<double> s = Sorted(column);
  return {s.front(), SortedQuantile(s, 0.25), SortedQuantile(s, 0.5), SortedQuantile(s, 0.75),
          s.back()};
}

int KMarginalBin(double v, const std::array<double, 5>& edges) {
  if (v > edges[4]) return 5;
  return static_cast<int>(std::upper_bound(edges.begin(), edges.begin() + 4, v) - edges.begin());
}

namespace {

double TotalDifference(const Dataset& original, const Dataset& synthetic,
                       const std::vector<std::size_t>& cols,
                       const std::vector<std::array<double, 5>>& edges) {
  std::unordered_map<std::uint64_t, std::pair<std::size_t, std::size_t>> cells;
  auto code = [&](const Dataset& d, std::size_t r) {
    std::uint64_t c = 0;
    for (std::size_t j : cols) c = c * 6 + static_cast<std::uint64_t>(KMarginalBin(d.column(j)[r], edges[j]));
    return c;
  };
  for (std::size_t r = 0; r < original.rows(); ++r) ++cells[code(original, r)].first;
  for (std::size_t r = 0; r < synthetic.rows(); ++r) ++cells[code(synthetic, r)].second;
  const double no = static_cast<double>(original.rows());
  const double ns = static_cast<double>(synthetic.rows());
  // Sum in key order so the result does not depend on hash iteration.
  std::vector<std::pair<std::uint64_t, std::pair<std::size_t, std::size_t>>> sorted(cells.begin(), cells.end());
  std::sort(sorted.begin(), sorted.end());
  double total = 0.0;
  for (const auto& [key, counts] : sorted) {
    total += std::abs(static_cast<double>(counts.first) / no - static_cast<double>(counts.second) / ns);
  }
  return std::min(total, 2.0);
}

}  // namespace

KMarginalResult KMarginal(const Dataset& original, const Dataset& synthetic, std::size_t k,
                          std::uint64_t seed) {
  RequireSameColumns(original, synthetic, "k-marginal");
  const std::size_t p = original.cols();
  if (k == 0 || k > p) throw ConfigError("k-marginal: k must lie in [1, #columns]");
  if (k > 24) throw ConfigError("k-marginal: k above 24 is not supported");
  KMarginalResult res;
  std::vector<std::array<double, 5>> edges(p);
  for (std::size_t j = 0; j < p; ++j) {
    edges[j] = KMarginalEdges(original.column(j));
    for (int e = 0; e + 1 < 5; ++e) {
      if (edges[j][static_cast<std::size_t>(e)] == edges[j][static_cast<std::size_t>(e) + 1]) res.merged_edges = true;
    }
  }
  std::vector<std::size_t> all(p);
  std::iota(all.begin(), all.end(), 0);
  if (k == p) {
    res.total_difference = TotalDifference(original, synthetic, all, edges);
  } else {
    Rng rng = MakeRng(seed);
    double sum = 0.0;
    constexpr int kDraws = 10;
    for (int d = 0; d < kDraws; ++d) {
      std::vector<std::size_t> cols = all;
      std::shuffle(cols.begin(), cols.end(), rng);
      cols.resize(k);
      std::sort(cols.begin(), cols.end());
      sum += TotalDifference(original, synthetic, cols, edges);
    }
    res.total_difference = sum / kDraws;
  }
  if (res.merged_edges) log::Debug("k-marginal: duplicate bin edges merged");
  res.score = 1000.0 * (2.0 - res.total_difference) / 2.0;
  return res;
}

namespace {

void RequireModel(const Dataset& d, const LinearModel& m, const char* what) {
  if (!d.has_column(m.response)) {
    throw DataError(std::string(what) + ": missing response column " + m.response);
  }
  for (const auto& p : m.predictors) {
    if (!d.has_column(p)) throw DataError(std::string(what) + ": missing predictor column " + p);
  }
}

}  // namespace

std::vector<double> StdCoefDiff(const Dataset& original, const Dataset& synthetic,
                                const LinearModel& model) {
  RequireModel(original, model, "coefficient difference");
  RequireModel(synthetic, model, "coefficient difference");
  const GlmFit fo = FitOls(BuildDesignMatrix(original, model.predictors), original.column_vector(model.response));
  const GlmFit fs = FitOls(BuildDesignMatrix(synthetic, model.predictors), synthetic.column_vector(model.response));
  std::vector<double> out;
  for (Eigen::Index j = 0; j < fo.coefficients.size(); ++j) {
    const double se = fo.standard_errors[j];
    const double d = std::abs(fo.coefficients[j] - fs.coefficients[j]);
    out.push_back(se > 0.0 ? d / se : std::numeric_limits<double>::infinity());
  }
  return out;
}

double Nrmse(const Dataset& train, const Dataset& test, const LinearModel& model) {
  RequireModel(train, model, "nrmse");
  RequireModel(test, model, "nrmse");
  const GlmFit fit = FitOls(BuildDesignMatrix(train, model.predictors), train.column_vector(model.response));
  const Vector y = test.column_vector(model.response);
  const Vector pred = BuildDesignMatrix(test, model.predictors) * fit.coefficients;
  const double sd = SampleSd(test.column(model.response));
  if (!(sd > 0.0)) throw DataError("nrmse: test response has zero standard deviation");
  const double rmse = std::sqrt((y - pred).squaredNorm() / static_cast<double>(y.size()));
  return rmse / sd;
}

namespace {

using YearMap = std::map<int, std::map<std::int64_t, double>>;

YearMap ByYear(const std::vector<PanelRecord>& panel) {
  YearMap m;
  for (const auto& r : panel) {
    if (!m[r.year].emplace(r.id, r.employment).second) {
      throw DataError("panel: duplicate record for id " + std::to_string(r.id) + " in year " +
                      std::to_string(r.year));
    }
  }
  return m;
}

struct Flows {
  int year;
  double created;
  double destroyed;
  double z;
};

std::vector<Flows> YearFlows(const std::vector<PanelRecord>& panel) {
  const YearMap by_year = ByYear(panel);
  std::vector<Flows> out;
  static const std::map<std::int64_t, double> kEmpty;
  for (auto it = by_year.begin(); it != by_year.end(); ++it) {
    if (it == by_year.begin()) continue;
    const int t = it->first;
    auto prev_it = by_year.find(t - 1);
    const auto& prev = prev_it == by_year.end() ? kEmpty : prev_it->second;
    const auto& cur = it->second;
    Flows f{t, 0.0, 0.0, 0.0};
    auto add = [&](double before, double after) {
      f.z += 0.5 * (after + before);
      const double d = after - before;
      if (d > 0.0) f.created += d;
      if (d < 0.0) f.destroyed += -d;
    };
    for (const auto& [id, emp] : cur) {
      auto p = prev.find(id);
      add(p == prev.end() ? 0.0 : p->second, emp);
    }
    for (const auto& [id, emp] : prev) {
      if (!cur.count(id)) add(emp, 0.0);  // exit
    }
    out.push_back(f);
  }
  return out;
}

double Rate(double num, double z) {
  return z > 0.0 ? num / z : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

std::vector<YearValue> GrossEmployment(const std::vector<PanelRecord>& panel) {
  std::vector<YearValue> out;
  for (const auto& [year, emps] : ByYear(panel)) {
    double s = 0.0;
    for (const auto& [id, e] : emps) s += e;
    out.push_back({year, s});
  }
  return out;
}

std::vector<YearValue> JobCreationRate(const std::vector<PanelRecord>& panel) {
  std::vector<YearValue> out;
  for (const auto& f : YearFlows(panel)) out.push_back({f.year, Rate(f.created, f.z)});
  return out;
}

std::vector<YearValue> JobDestructionRate(const std::vector<PanelRecord>& panel) {
  std::vector<YearValue> out;
  for (const auto& f : YearFlows(panel)) out.push_back({f.year, Rate(f.destroyed, f.z)});
  return out;
}

std::vector<YearValue> NetJobCreationRate(const std::vector<PanelRecord>& panel) {
  std::vector<YearValue> out;
  for (const auto& f : YearFlows(panel)) {
    out.push_back({f.year, Rate(f.created, f.z) - Rate(f.destroyed, f.z)});
  }
  return out;
}

std::vector<std::pair<std::string, double>> UtilityReport::Values() const {
  std::vector<std::pair<std::string, double>> v = {
      {"pmse_woi", pmse_woi}, {"pmse_wi", pmse_wi}, {"wrt_ratio", wrt_ratio}, {"km_score", km_score}};
  for (std::size_t j = 0; j < coef_diffs.size(); ++j) v.emplace_back("coef_diff_" + std::to_string(j), coef_diffs[j]);
  for (std::size_t j = 0; j < nrmse.size(); ++j) v.emplace_back("nrmse_" + std::to_string(j), nrmse[j]);
  return v;
}

std::string UtilityReport::CsvHeader(std::size_t n_coef, std::size_t n_nrmse) {
  std::string h = "method,pmse_woi,pmse_wi,wrt_ratio,km_score";
  for (std::size_t j = 0; j < n_coef; ++j) h += ",coef_diff_" + std::to_string(j);
  for (std::size_t j = 0; j < n_nrmse; ++j) h += ",nrmse_" + std::to_string(j);
  h += ",classifier_woi,classifier_wi";
  return h;
}

std::string UtilityReport::CsvRow() const {
  std::string row = method;
  for (const auto& [name, value] : Values()) row += "," + FormatDouble(value);
  row += "," + classifier_woi + "," + classifier_wi;
  return row;
}

std::string UtilityReport::Text() const {
  std::ostringstream out;
  out << "method: " << method << '\n';
  for (const auto& [name, value] : Values()) out << "  " << name << ": " << FormatDouble(value) << '\n';
  out << "  classifier_woi: " << classifier_woi << '\n';
  out << "  classifier_wi: " << classifier_wi << '\n';
  return out.str();
}

}  // namespace kngsynth
