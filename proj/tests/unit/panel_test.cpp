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

#include <set>

#include "kngsynth/error.hpp"
#include "kngsynth/panel.hpp"

namespace kngsynth {
namespace {

TEST(Panel, CsvRoundTrip) {
  ToyPanelOptions o;
  o.years = 4;
  o.initial_establishments = 30;
  const auto p = GenerateToyPanel(o, 1);
  EXPECT_EQ(ParsePanelCsv(FormatPanelCsv(p)), SortPanel(p));
}

TEST(Panel, ValidateRejectsBadRecords) {
  using S = PanelStatus;
  EXPECT_THROW(ValidatePanel({{1, 2000, -1, S::kBirth}}), DataError);
  EXPECT_THROW(ValidatePanel({{1, 2000, 1, S::kBirth}, {1, 2000, 2, S::kBirth}}), DataError);
  EXPECT_THROW(ValidatePanel({{1, 2001, 1, S::kContinuer}}), DataError);
  EXPECT_NO_THROW(ValidatePanel({{1, 2000, 1, S::kBirth}, {1, 2001, 1, S::kContinuer}}));
  EXPECT_THROW(ParsePanelCsv("id,year,emp,status\n1,2000,3,alive\n"), DataError);
}

TEST(ToyPanel, ShapeAndDeterminism) {
  ToyPanelOptions o;
  o.years = 6;
  o.initial_establishments = 100;
  const auto p = GenerateToyPanel(o, 2);
  EXPECT_NO_THROW(ValidatePanel(p));
  std::set<int> years;
  for (const auto& r : p) {
    years.insert(r.year);
    EXPECT_LE(r.employment, o.emp_cap);
  }
  EXPECT_EQ(years.size(), 6u);
  EXPECT_EQ(*years.begin(), o.first_year);
  EXPECT_EQ(p, GenerateToyPanel(o, 2));
}

TEST(SynthesizePanel, PreservesSkeletonAndBudget) {
  ToyPanelOptions o;
  o.years = 4;
  o.initial_establishments = 150;
  const auto p = SortPanel(GenerateToyPanel(o, 3));
  PanelPlan plan;
  plan.shares = {0.5, 0.6};
  MhConfig mh;
  mh.iterations = 300;
  mh.burn_in = 150;
  const PanelSynthesis s = SynthesizePanel(p, plan, mh, 4);
  const auto out = SortPanel(s.panel);
  ASSERT_EQ(out.size(), p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    EXPECT_EQ(out[i].id, p[i].id);
    EXPECT_EQ(out[i].year, p[i].year);
    EXPECT_EQ(out[i].status, p[i].status);
    EXPECT_GE(out[i].employment, plan.emp_lower);
    EXPECT_LE(out[i].employment, plan.emp_upper);
  }
  EXPECT_TRUE(BudgetClose(LedgerTotal(s.ledger), plan.total_epsilon));
}

TEST(PanelPlan, Validate) {
  PanelPlan plan;
  EXPECT_NO_THROW(plan.Validate());
  plan.continuer_share = 1.0;
  EXPECT_THROW(plan.Validate(), ConfigError);
  plan.continuer_share = 0.5;
  plan.step_scale = 0.0;
  EXPECT_THROW(plan.Validate(), ConfigError);
}

}  // namespace
}  // namespace kngsynth
