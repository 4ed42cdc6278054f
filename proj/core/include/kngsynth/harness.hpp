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

#ifndef KNGSYNTH_HARNESS_HPP_
#define KNGSYNTH_HARNESS_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kngsynth/dataset.hpp"
#include "kngsynth/panel.hpp"
#include "kngsynth/schedules.hpp"
#include "kngsynth/synthesizer.hpp"
#include "kngsynth/utility.hpp"

namespace kngsynth {

struct SimulatedPair {
  Dataset train;
  Dataset test;
};

// X1 ~ Exp(0.1); X2 = 4 + 3 X1 + xi; X3 = 3 + 2 X1 + X2 + gamma with
// xi, gamma ~ Exp(0.1). Train and test come from separate streams of `seed`.
SimulatedPair SimulateData(std::uint64_t seed, std::size_t n);

// Chain settings shared by every private run.
struct ChainSettings {
  long iterations = 5000;
  long burn_in = 2500;
  MhConfig Template() const;
};

// Per-variable settings of the sequential simulation plan.
struct SimulationPlanSettings {
  double epsilon = 1.0;
  std::vector<double> shares{0.5, 0.25, 0.25};
  std::vector<double> cx{1.0, 46.0, 106.0};
  std::vector<double> lower{0.0, 0.0, 0.0};
  std::vector<double> upper{1000.0, 1000.0, 2000.0};
  std::vector<double> taus = SimulationTaus49();
  std::vector<double> main_taus = DefaultMainTaus();
  // The intercept-only first variable and the regression variables use
  // different splits.
  BudgetShares first_shares{0.25, 0.6};
  BudgetShares regression_shares{0.8, 0.8};
  // Per-column multiplier of the heuristic proposal sds. The regression
  // stages' densities are nearly flat away from the median, so their chains
  // need short steps to stay near their starting fits.
  std::vector<double> step_scale{1.0, 0.02, 0.02};
};

// Sequential plan: the first column intercept-only, every later column on
// all earlier ones. Defaults to the columns X1, X2, X3.
SynthesisPlan SimulationPlan(const SimulationPlanSettings& s, Method method,
                             const std::vector<std::string>& names = {"X1", "X2", "X3"});

struct EvalConfig {
  int wrt_swaps = 1000;
  WrtNull wrt_null = WrtNull::kSingleSwap;
  std::size_t km_k = 0;  // 0 means every column
  // Empty response means: second column on the first.
  LinearModel coef_model;
  // Empty means: each column from the second on, regressed on all earlier
  // columns.
  std::vector<LinearModel> nrmse_models;
};

// Every metric for one synthetic dataset. Specific-utility models default
// to the sequential ones described in EvalConfig.
UtilityReport Evaluate(const Dataset& original, const Dataset& synthetic, const Dataset& test,
                       const EvalConfig& config, std::uint64_t seed);

struct StudyConfig {
  int reps = 20;
  std::size_t n = 5000;
  std::uint64_t seed = 20240601;
  std::vector<Method> methods = AllMethods();
  SimulationPlanSettings plan;
  ChainSettings chain;
  EvalConfig eval;
  unsigned threads = 0;
  // Applied to each method's plan before synthesis, e.g. step-size overrides.
  std::function<void(SynthesisPlan&)> adjust_plan;
};

struct StudyRow {
  int rep = 0;
  Method method = Method::kNonprivate;
  UtilityReport report;
  std::size_t crossings = 0;  // summed over variables, training designs
  double ledger_total = 0.0;
  std::vector<Allocation> ledger;
  std::string error;  // non-empty when the replication failed
};

struct StudyResult {
  std::vector<StudyRow> rows;  // ordered by (rep, method)
};

using StudyProgress = std::function<void(const StudyRow&)>;

StudyResult RunSimulationStudy(const StudyConfig& config, const StudyProgress& progress = {});

struct CellSummary {
  double mean = 0.0;
  double se = 0.0;
  int count = 0;
};

// Mean and standard error (sd / sqrt(count)) of one metric for one method
// over successful replications.
CellSummary Summarize(const StudyResult& result, Method method, const std::string& metric);

std::string StudyRowsCsv(const StudyResult& result);
// General utility: pMSE WOI, pMSE WI, WRT, KM.
std::string StudyTable1Csv(const StudyResult& result, const std::vector<Method>& methods);
// Specific utility: intercept and slope differences, NRMSE per target.
std::string StudyTable2Csv(const StudyResult& result, const std::vector<Method>& methods);

struct SweepConfig {
  int reps = 20;
  std::size_t n = 5000;
  std::uint64_t seed = 20240602;
  double epsilon = 0.5;
  double cx = 46.0;
  double upper = 1000.0;
  std::vector<double> taus = Taus20();
  std::vector<double> main_taus = DefaultMainTaus();
  // Median share (stepwise) or anchor share (sandwich).
  std::vector<double> share_grid{0.05, 0.1, 0.2, 0.4, 0.6, 0.8};
  std::vector<Method> methods{Method::kStepwiseFixed};
  double step_scale = 0.1;
  ChainSettings chain;
  unsigned threads = 0;
};

// True coefficients of the X2 | X1 quantile line at tau.
double TrueSweepIntercept(double tau);
inline constexpr double kTrueSweepSlope = 3.0;

struct SweepCell {
  Method method;
  double share = 0.0;
  double tau = 0.0;
  double mean_l2 = 0.0;
  double sd_l2 = 0.0;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  std::vector<Allocation> ledger;  // of the last run, for the manifest
  // Mean over tau and replications per (method, share).
  double MeanL2(Method method, double share) const;
};

// Schedule for the sweep at one share. Stepwise varies the median share;
// sandwich varies the anchor share with an even split inside the anchors.
QuantileSchedule SweepSchedule(const SweepConfig& config, Method method, double share);

SweepResult RunBudgetSweep(const SweepConfig& config);
std::string SweepCsv(const SweepResult& result);
std::string SweepSummaryCsv(const SweepResult& result, const SweepConfig& config);

struct PanelExperimentConfig {
  std::uint64_t seed = 20240603;
  int synthetic_versions = 5;
  PanelPlan plan;
  ChainSettings chain;
  ToyPanelOptions toy;
  bool shares_unspecified = true;  // the continuer/birth schedules' anchor shares
  unsigned threads = 0;
};

struct SeriesPoint {
  int year = 0;
  double original = 0.0;
  double mean = 0.0;
  double sd = 0.0;
};

struct PanelExperimentResult {
  std::vector<std::vector<PanelRecord>> synthetic;  // one per version
  std::vector<std::vector<Allocation>> ledgers;
  std::vector<std::uint64_t> seeds;
  std::vector<SeriesPoint> gross_employment;
  std::vector<SeriesPoint> job_creation;
  std::vector<SeriesPoint> net_job_creation;
  // Pearson correlation of each version's gross-employment series with the
  // input's.
  std::vector<double> trend_correlation;
};

PanelExperimentResult RunPanelExperiment(const std::vector<PanelRecord>& panel,
                                         const PanelExperimentConfig& config);
std::string SeriesCsv(const std::vector<SeriesPoint>& series);

double PearsonCorrelation(std::span<const double> a, std::span<const double> b);

}  // namespace kngsynth

#endif  // KNGSYNTH_HARNESS_HPP_
