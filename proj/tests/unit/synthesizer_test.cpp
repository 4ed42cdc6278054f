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

#include <algorithm>
#include <random>

#include "kngsynth/error.hpp"
#include "kngsynth/harness.hpp"
#include "kngsynth/synthesizer.hpp"

namespace kngsynth {

// Readable parameter values in test listings.
inline void PrintTo(Method m, std::ostream* os) { *os << MethodName(m); }

namespace {

MhConfig ShortChain() {
  MhConfig mh;
  mh.iterations = 400;
  mh.burn_in = 200;
  return mh;
}

SimulationPlanSettings SmallGrid() {
  SimulationPlanSettings s;
  s.taus = Taus20();
  return s;
}

TEST(SynthesizeColumn, StaysInBoundsAndUsesFitLevels) {
  Matrix x(500, 2);
  x.col(0).setOnes();
  for (int i = 0; i < 500; ++i) x(i, 1) = i % 10;
  std::vector<QuantileFit> fits;
  for (double t : {0.25, 0.5, 0.75}) {
    Vector b(2);
    b << 10.0 * t, 1.0;
    fits.push_back({t, b});
  }
  const ColumnBounds bounds{20.0, 3.0, 9.0};
  const auto v = SynthesizeColumn(fits, x, bounds, 7);
  ASSERT_EQ(v.size(), 500u);
  for (int i = 0; i < 500; ++i) {
    EXPECT_GE(v[i], 3.0);
    EXPECT_LE(v[i], 9.0);
    bool matches = false;
    for (const auto& f : fits) {
      const double p = std::clamp(f.beta[0] + f.beta[1] * x(i, 1), 3.0, 9.0);
      matches = matches || v[i] == p;
    }
    EXPECT_TRUE(matches) << "row " << i;
  }
  EXPECT_EQ(v, SynthesizeColumn(fits, x, bounds, 7));
  EXPECT_THROW(SynthesizeColumn(fits, Matrix::Ones(3, 3), bounds, 7), DataError);
}

TEST(Plan, ValidateCatchesForwardReferencesAndShares) {
  SynthesisPlan p = SimulationPlan(SmallGrid(), Method::kStepwiseFixed);
  EXPECT_NO_THROW(p.Validate());
  SynthesisPlan fwd = p;
  fwd.variables[1].predictors = {"X3"};
  EXPECT_THROW(fwd.Validate(), ConfigError);
  SynthesisPlan shares = p;
  shares.variables[0].epsilon_share = 0.9;
  EXPECT_THROW(shares.Validate(), ConfigError);
  const Dataset wrong({"A"}, {{1.0, 2.0}});
  EXPECT_THROW(p.Validate(&wrong), ConfigError);
}

class FullSynthesis : public ::testing::TestWithParam<Method> {};

TEST_P(FullSynthesis, LedgerShapeAndBounds) {
  const SimulatedPair d = SimulateData(5, 400);
  const SynthesisPlan plan = SimulationPlan(SmallGrid(), GetParam());
  const SynthesisResult r = SynthesizeDataset(d.train, plan, ShortChain(), 11);
  EXPECT_EQ(r.synthetic.names(), d.train.names());
  EXPECT_EQ(r.synthetic.rows(), d.train.rows());
  for (std::size_t j = 0; j < 3; ++j) {
    const auto c = r.synthetic.column(j);
    EXPECT_GE(*std::min_element(c.begin(), c.end()), plan.variables[j].bounds.outcome_lower);
    EXPECT_LE(*std::max_element(c.begin(), c.end()), plan.variables[j].bounds.outcome_upper);
  }
  if (GetParam() == Method::kNonprivate) {
    EXPECT_TRUE(r.ledger.empty());
  } else {
    EXPECT_EQ(r.ledger.size(), 60u);
    EXPECT_TRUE(BudgetClose(LedgerTotal(r.ledger), 1.0));
  }
  const SynthesisResult again = SynthesizeDataset(d.train, plan, ShortChain(), 11);
  EXPECT_EQ(r.synthetic, again.synthetic);
}

INSTANTIATE_TEST_SUITE_P(Methods, FullSynthesis, ::testing::ValuesIn(AllMethods()),
                         [](const auto& info) {
                           std::string s(MethodName(info.param));
                           std::replace(s.begin(), s.end(), '-', '_');
                           return s;
                         });

TEST(FullSynthesis, ConstrainedMethodsHaveNoCrossings) {
  const SimulatedPair d = SimulateData(6, 400);
  for (Method m : {Method::kStepwiseFixed, Method::kSandwichVarying}) {
    const SynthesisResult r =
        SynthesizeDataset(d.train, SimulationPlan(SmallGrid(), m), ShortChain(), 3);
    for (const auto& run : r.runs) EXPECT_EQ(run.crossings, 0u) << MethodName(m) << " " << run.name;
  }
}

TEST(FullSynthesis, TracesOnRequest) {
  const SimulatedPair d = SimulateData(7, 200);
  SynthesisOptions o;
  o.collect_traces = true;
  const SynthesisResult r = SynthesizeDataset(
      d.train, SimulationPlan(SmallGrid(), Method::kStepwiseFixed), ShortChain(), 1, o);
  for (const auto& run : r.runs) {
    ASSERT_EQ(run.traces.size(), 20u);
    for (const auto& t : run.traces) EXPECT_EQ(t.size(), 200u);
  }
}

}  // namespace
}  // namespace kngsynth
