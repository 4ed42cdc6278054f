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

#include <gtest/gtest.h>

#include "kngsynth/config.hpp"
#include "kngsynth/error.hpp"

namespace kngsynth {
namespace {

TEST(Config, DefaultsFromEmptyDocument) {
  const RunConfig c = ParseRunConfig("{}");
  EXPECT_EQ(c.command, Command::kSimulate);
  EXPECT_EQ(c.reps, 20);
  EXPECT_EQ(c.n, 5000u);
  EXPECT_EQ(c.chain.iterations, 5000);
  EXPECT_EQ(c.plan.cx, (std::vector<double>{1.0, 46.0, 106.0}));
}

TEST(Config, ParsesNestedKeys) {
  const RunConfig c = ParseRunConfig(R"(
command: budget-sweep
seed: 7
epsilon: 0.25
chain: {iterations: 100, burn_in: 50}
plan:
  shares: [0.4, 0.3, 0.3]
sweep:
  share_grid: [0.1, 0.2]
step_sizes:
  X2: {default: [0.1, 0.01], "0.5": [0.2, 0.02]}
)");
  EXPECT_EQ(c.command, Command::kBudgetSweep);
  EXPECT_EQ(c.seed, 7u);
  ASSERT_TRUE(c.epsilon.has_value());
  EXPECT_EQ(*c.epsilon, 0.25);
  EXPECT_EQ(c.chain.burn_in, 50);
  EXPECT_EQ(c.plan.shares[0], 0.4);
  EXPECT_EQ(c.sweep.share_grid.size(), 2u);
  EXPECT_EQ(c.step_sizes.at("X2").at("0.5")[1], 0.02);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(ParseRunConfig("bogus: 1"), ConfigError);
  EXPECT_THROW(ParseRunConfig("plan: {nope: 2}"), ConfigError);
  EXPECT_THROW(ParseRunConfig("command: fly"), ConfigError);
  EXPECT_THROW(ParseRunConfig("epsilon: abc"), ConfigError);
}

TEST(Config, ResolveAppliesEpsilonByCommand) {
  RunConfig c;
  c.command = Command::kBudgetSweep;
  c.epsilon = 0.3;
  c.seed = 99;
  c.Resolve();
  EXPECT_EQ(c.sweep.epsilon, 0.3);
  EXPECT_EQ(c.sweep.seed, 99u);
  RunConfig p;
  p.command = Command::kPanel;
  p.epsilon = 2.0;
  p.Resolve();
  EXPECT_EQ(p.panel.plan.total_epsilon, 2.0);
}

TEST(Config, ManifestRoundTrip) {
  RunConfig c = ParseRunConfig("command: synthesize\nseed: 5\nepsilon: 0.1\nmethods: [kng]\n");
  c.Resolve();
  ManifestExtras x;
  x.seeds = {{"data", 123}};
  x.ledgers = {{"run", {{"X1/tau=0.5", 0.1}}}};
  x.notes = {"hello"};
  const std::string text = EmitManifest(c, x);
  RunConfig back = ParseRunConfig(text);
  back.Resolve();
  EXPECT_EQ(EmitManifest(back, x), text);
  EXPECT_NE(text.find("X1/tau=0.5"), std::string::npos);
}

TEST(Config, ApplyStepSizes) {
  RunConfig c = ParseRunConfig("step_sizes:\n  X2: {default: [0.5, 0.05], \"0.25\": [1, 0.1]}\n");
  SynthesisPlan plan = SimulationPlan(c.plan, Method::kStepwiseFixed);
  ApplyStepSizes(c, plan);
  ASSERT_TRUE(plan.variables[1].step_sizes.has_value());
  EXPECT_EQ((*plan.variables[1].step_sizes)[0], 0.5);
  EXPECT_EQ(plan.variables[1].tau_step_sizes.at(0.25)[1], 0.1);
  RunConfig bad = ParseRunConfig("step_sizes:\n  Q: {default: [1]}\n");
  EXPECT_THROW(ApplyStepSizes(bad, plan), ConfigError);
}

}  // namespace
}  // namespace kngsynth
