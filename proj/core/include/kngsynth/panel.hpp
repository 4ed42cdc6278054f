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

#ifndef KNGSYNTH_PANEL_HPP_
#define KNGSYNTH_PANEL_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "kngsynth/budget.hpp"
#include "kngsynth/kng.hpp"
#include "kngsynth/schedules.hpp"

namespace kngsynth {

enum class PanelStatus { kBirth, kContinuer };

std::string_view StatusName(PanelStatus s);

// One establishment-year.
struct PanelRecord {
  std::int64_t id = 0;
  int year = 0;
  double employment = 0.0;
  PanelStatus status = PanelStatus::kBirth;
  bool operator==(const PanelRecord&) const = default;
};

// Checks nonnegative employment, unique (id, year), and that every
// continuer has a record for the previous year. Throws DataError.
void ValidatePanel(const std::vector<PanelRecord>& panel);

// Sorted by (year, id).
std::vector<PanelRecord> SortPanel(std::vector<PanelRecord> panel);

// CSV with header id,year,emp,status.
std::vector<PanelRecord> ParsePanelCsv(std::string_view text);
std::string FormatPanelCsv(const std::vector<PanelRecord>& panel);
std::vector<PanelRecord> LoadPanelCsv(const std::filesystem::path& path);
void WritePanelCsv(const std::vector<PanelRecord>& panel, const std::filesystem::path& path);

struct PanelPlan {
  double total_epsilon = 1.0;
  // Share of a year's budget spent on continuers when births also occur.
  double continuer_share = 0.75;
  double emp_lower = 0.0;
  double emp_upper = 2000.0;
  // Row-norm bound for continuer designs (intercept, prior-year employment).
  double continuer_cx = 2000.0;
  std::vector<double> taus;       // defaults to Taus20()
  std::vector<double> main_taus;  // defaults to DefaultMainTaus()
  ConstraintMode mode{Scheme::kStepwise, SlopeRule::kVarying};
  BudgetShares shares;  // required in config files; no published values
  double step_scale = 0.02;  // multiplies the heuristic proposal sds
  void Validate() const;
};

struct PanelSynthesis {
  std::vector<PanelRecord> panel;  // same ids, years and statuses as the input
  std::vector<Allocation> ledger;
};

// Year by year: births from intercept-only private quantiles; continuers from
// a private quantile regression on prior-year employment, predicted from the
// synthetic prior-year value. The first year is all intercept-only. The
// budget is split evenly over years, then continuer_share / rest when both
// groups are present.
PanelSynthesis SynthesizePanel(const std::vector<PanelRecord>& panel, const PanelPlan& plan,
                               const MhConfig& mh_template, std::uint64_t seed);

struct ToyPanelOptions {
  int years = 25;
  int first_year = 1976;
  int initial_establishments = 2000;
  double birth_rate = 0.10;
  double death_rate = 0.06;
  double emp_cap = 2000.0;
};

// Small LBD-like panel with a growing establishment count, lognormal
// employment at birth and multiplicative year-on-year changes.
std::vector<PanelRecord> GenerateToyPanel(const ToyPanelOptions& options, std::uint64_t seed);

}  // namespace kngsynth

#endif  // KNGSYNTH_PANEL_HPP_
