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

#ifndef KNGSYNTH_SYNTHESIZER_HPP_
#define KNGSYNTH_SYNTHESIZER_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kngsynth/budget.hpp"
#include "kngsynth/dataset.hpp"
#include "kngsynth/kng.hpp"
#include "kngsynth/quantile_regression.hpp"
#include "kngsynth/schedules.hpp"

namespace kngsynth {

struct VariablePlan {
  std::string name;
  std::vector<std::string> predictors;  // earlier variables only
  ColumnBounds bounds;
  QuantileSchedule schedule;
  double epsilon_share = 1.0;
  // Proposal sds; HeuristicStepSizes on the winsorized response when unset.
  std::optional<std::vector<double>> step_sizes;
  // Multiplies the heuristic step sizes; ignored when step_sizes is set.
  double step_scale = 1.0;
  // Per-level overrides keyed by tau.
  std::map<double, std::vector<double>> tau_step_sizes;
};

struct SynthesisPlan {
  double total_epsilon = 1.0;
  // Ordinary quantile regression instead of KNG; spends no budget.
  bool nonprivate = false;
  std::vector<VariablePlan> variables;

  // Checks the order (no forward references), shares summing to one, bounds
  // and schedules. With a dataset, also that the plan names exactly its
  // columns. Throws ConfigError.
  void Validate(const Dataset* data = nullptr) const;
};

// Draws one quantile level uniformly per row and returns that level's
// prediction from the (synthetic) design, clamped to the outcome bounds.
// Warns when the fits cross on the design. Throws DataError on a dimension
// mismatch.
std::vector<double> SynthesizeColumn(const std::vector<QuantileFit>& fits, const Matrix& design,
                                     const ColumnBounds& bounds, std::uint64_t seed);

struct VariableRun {
  std::string name;
  std::vector<QuantileFit> fits;
  std::vector<ChainStats> stats;
  std::vector<double> step_sizes;
  std::vector<std::vector<Vector>> traces;
  std::size_t crossings = 0;  // on the training design
};

struct SynthesisResult {
  Dataset synthetic;
  std::vector<Allocation> ledger;
  std::vector<VariableRun> runs;
};

struct SynthesisOptions {
  bool collect_traces = false;
};

// Sequential full synthesis. Each variable is fitted on the original data
// (response winsorized, design rows clipped to the variable's C_X) and
// predicted from the already-synthesized predecessors. The first variable
// has no predictors and is drawn from intercept-only fits. Output columns
// follow the original's order.
SynthesisResult SynthesizeDataset(const Dataset& original, const SynthesisPlan& plan,
                                  const MhConfig& mh_template, std::uint64_t seed,
                                  const SynthesisOptions& options = {});

}  // namespace kngsynth

#endif  // KNGSYNTH_SYNTHESIZER_HPP_
