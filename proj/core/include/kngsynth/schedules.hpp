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

#ifndef KNGSYNTH_SCHEDULES_HPP_
#define KNGSYNTH_SCHEDULES_HPP_

#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kngsynth/budget.hpp"
#include "kngsynth/kng.hpp"
#include "kngsynth/quantile_grid.hpp"
#include "kngsynth/quantile_regression.hpp"

namespace kngsynth {

enum class Scheme { kStepwise, kSandwich, kIndependent };
enum class SlopeRule { kFixed, kVarying };

struct ConstraintMode {
  Scheme scheme = Scheme::kStepwise;
  SlopeRule slope_rule = SlopeRule::kFixed;
  bool operator==(const ConstraintMode&) const = default;
};

// Synthesis methods compared by the harness. kNonprivate fits ordinary
// quantile regression and spends no budget.
enum class Method {
  kNonprivate,
  kIndependent,
  kStepwiseFixed,
  kStepwiseVarying,
  kSandwichFixed,
  kSandwichVarying,
};

std::string_view MethodName(Method m);
Method ParseMethod(std::string_view name);  // throws ConfigError
std::vector<Method> AllMethods();
ConstraintMode ModeOf(Method m);  // throws for kNonprivate
bool IsPrivate(Method m);

// Budget shares inside one variable. Stepwise: median_share of the variable
// budget goes to the median, the rest is split evenly. Sandwich:
// anchor_share goes to the anchors, median_share of that to the median, the
// rest of the anchor budget evenly over the other anchors, and the
// remainder evenly over the in-between levels. Independent ignores both.
struct BudgetShares {
  double median_share = 0.8;
  double anchor_share = 0.8;
  bool operator==(const BudgetShares&) const = default;
};

struct QuantileSchedule {
  QuantileGrid grid;
  ConstraintMode mode;
  BudgetShares shares;

  void Validate() const;  // throws ConfigError
  // Budget tree rooted at `name` with one leaf per tau.
  BudgetTree Allocate(std::string name, double variable_epsilon) const;
  // Leaf epsilons in grid order.
  std::vector<double> EpsilonPerTau(double variable_epsilon) const;
};

// Leaf label for one quantile level, e.g. "tau=0.05".
std::string TauLabel(double tau);

// Lower and/or upper already-accepted neighbours of a candidate.
struct Neighbors {
  const QuantileFit* lower = nullptr;
  const QuantileFit* upper = nullptr;
};

// Intercept strictly between the neighbours' intercepts (one-sided when only
// one neighbour exists). The candidate's slopes are assumed pinned.
bool ConstraintFixedSlope(const QuantileFit& candidate, Neighbors neighbors);

// Fitted values strictly ordered against each neighbour at every row of x.
// Throws DataError on a dimension mismatch.
bool ConstraintDataCheck(const QuantileFit& candidate, Neighbors neighbors, const Matrix& x);

// Default proposal scales: 0.5 IQR(y) / sqrt(n) for the intercept and one
// tenth of that for every slope.
std::vector<double> HeuristicStepSizes(std::span<const double> y, Eigen::Index k);

// Data for one variable's schedule run.
struct ScheduleInput {
  std::shared_ptr<const Matrix> x;  // design with intercept column first
  std::shared_ptr<const Vector> y;
  double epsilon = 1.0;  // budget for this variable across all levels
  double cx_bound = 1.0;
  double base_c = kDefaultBaseC;
  std::string name = "var";  // ledger prefix and seed stream
  bool collect_traces = false;
  // Proposal sds for individual levels, replacing the MhConfig's.
  std::map<double, std::vector<double>> step_overrides;
};

struct ScheduleResult {
  std::vector<QuantileFit> fits;     // grid order
  std::vector<Allocation> ledger;    // one entry per sampled level
  std::vector<ChainStats> stats;     // grid order
  std::vector<std::vector<Vector>> traces;  // grid order, when requested
};

// Median first from the non-private start, then the lower levels in
// decreasing order and the upper levels in increasing order, each bounded by
// the previously accepted neighbour.
ScheduleResult StepwiseKng(const ScheduleInput& input, const QuantileSchedule& schedule,
                           const MhConfig& mh);

// Anchors by the stepwise schedule, then each remaining level in ascending
// order between its nearest estimated neighbours.
ScheduleResult SandwichKng(const ScheduleInput& input, const QuantileSchedule& schedule,
                           const MhConfig& mh);

// One unconstrained chain per level at an equal budget share; crossings are
// possible and left in place.
ScheduleResult IndependentKng(const ScheduleInput& input, const QuantileSchedule& schedule,
                              const MhConfig& mh);

ScheduleResult RunSchedule(const ScheduleInput& input, const QuantileSchedule& schedule,
                           const MhConfig& mh);

// Ordinary quantile regression at every grid level.
std::vector<QuantileFit> NonprivateFits(const Matrix& x, const Vector& y,
                                        const QuantileGrid& grid);

}  // namespace kngsynth

#endif  // KNGSYNTH_SCHEDULES_HPP_
