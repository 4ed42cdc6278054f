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

#ifndef KNGSYNTH_CONFIG_HPP_
#define KNGSYNTH_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kngsynth/budget.hpp"
#include "kngsynth/harness.hpp"

namespace kngsynth {

enum class Command { kSimulate, kSynthesize, kEvaluate, kBudgetSweep, kPanel };

std::string_view CommandName(Command c);
Command ParseCommand(std::string_view name);  // throws ConfigError

// Fully resolved settings of one CLI invocation. Every field has a default;
// a YAML file may set any subset, and the emitted manifest sets all of them
// so it can be replayed.
struct RunConfig {
  Command command = Command::kSimulate;
  std::uint64_t seed = 20240601;
  std::optional<double> epsilon;  // overrides the command's own budget
  int reps = 20;
  std::size_t n = 5000;
  std::string out = "out";
  std::vector<Method> methods;  // empty: the command's default set
  bool debug_trace = false;
  unsigned threads = 0;

  ChainSettings chain;
  SimulationPlanSettings plan;
  // Proposal sds per variable; key "default" or a tau.
  std::map<std::string, std::map<std::string, std::vector<double>>> step_sizes;
  EvalConfig eval;

  // synthesize / evaluate inputs
  std::string input;
  std::string synthetic;
  std::string test;
  bool study = false;  // evaluate: run the full simulation study

  SweepConfig sweep;

  PanelExperimentConfig panel;
  std::string panel_input;  // empty: generate a toy panel
  Method panel_method = Method::kStepwiseVarying;

  // Copies seed, reps, n, epsilon, chain and threads into the nested
  // configs that use them.
  void Resolve();
};

RunConfig ParseRunConfig(std::string_view yaml);
RunConfig LoadRunConfig(const std::filesystem::path& path);

struct ManifestExtras {
  std::vector<std::pair<std::string, std::uint64_t>> seeds;
  // Ledger per run, keyed by a run label.
  std::vector<std::pair<std::string, std::vector<Allocation>>> ledgers;
  std::vector<std::string> notes;
};

// YAML text of the resolved config plus seeds, ledgers and notes. Parsing it
// with ParseRunConfig restores the same RunConfig.
std::string EmitManifest(const RunConfig& config, const ManifestExtras& extras);

// Applies the per-variable step-size overrides to a plan.
void ApplyStepSizes(const RunConfig& config, SynthesisPlan& plan);

}  // namespace kngsynth

#endif  // KNGSYNTH_CONFIG_HPP_
