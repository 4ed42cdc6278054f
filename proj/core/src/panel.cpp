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

#include "kngsynth/panel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>

#include "kngsynth/error.hpp"
#include "kngsynth/quantile_grid.hpp"
#include "kngsynth/seeding.hpp"
#include "kngsynth/synthesizer.hpp"

namespace kngsynth {

std::string_view StatusName(PanelStatus s) {
  return s == PanelStatus::kBirth ? "birth" : "continuer";
}

void ValidatePanel(const std::vector<PanelRecord>& panel) {
  std::set<std::pair<std::int64_t, int>> keys;
  for (const auto& r : panel) {
    if (!(r.employment >= 0.0) || !std::isfinite(r.employment)) {
      throw DataError("panel: id " + std::to_string(r.id) + " year " + std::to_string(r.year) +
                      " has invalid employment");
    }
    if (!keys.emplace(r.id, r.year).second) {
      throw DataError("panel: duplicate record for id " + std::to_string(r.id) + " in year " +
                      std::to_string(r.year));
    }
  }
  for (const auto& r : panel) {
    if (r.status == PanelStatus::kContinuer && !keys.count({r.id, r.year - 1})) {
      throw DataError("panel: continuer id " + std::to_string(r.id) + " in year " +
                      std::to_string(r.year) + " has no record for year " +
                      std::to_string(r.year - 1));
    }
  }
}

std::vector<PanelRecord> SortPanel(std::vector<PanelRecord> panel) {
  std::sort(panel.begin(), panel.end(), [](const PanelRecord& a, const PanelRecord& b) {
    return a.year != b.year ? a.year < b.year : a.id < b.id;
  });
  return panel;
}

namespace {

std::string_view TrimView(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
bool ParseInt(std::string_view s, T& out) {
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

std::vector<PanelRecord> ParsePanelCsv(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto pos = text.find('\n', start);
    lines.push_back(TrimView(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw DataError("panel: empty file");
  if (lines.front() != "id,year,emp,status") {
    throw DataError("panel: header must be id,year,emp,status");
  }
  std::vector<PanelRecord> out;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    std::vector<std::string_view> cells;
    std::string_view line = lines[r];
    std::size_t s = 0;
    for (;;) {
      const auto pos = line.find(',', s);
      cells.push_back(TrimView(line.substr(s, pos == std::string_view::npos ? std::string_view::npos : pos - s)));
      if (pos == std::string_view::npos) break;
      s = pos + 1;
    }
    const std::string where = "panel row " + std::to_string(r);
    if (cells.size() != 4) throw DataError(where + ": expected 4 cells");
    PanelRecord rec;
    if (!ParseInt(cells[0], rec.id)) throw DataError(where + ": bad id");
    if (!ParseInt(cells[1], rec.year)) throw DataError(where + ": bad year");
    if (!ParseDouble(cells[2], rec.employment)) throw DataError(where + ": bad emp");
    if (cells[3] == "birth") {
      rec.status = PanelStatus::kBirth;
    } else if (cells[3] == "continuer") {
      rec.status = PanelStatus::kContinuer;
    } else {
      throw DataError(where + ": status must be birth or continuer");
    }
    out.push_back(rec);
  }
  ValidatePanel(out);
  return out;
}

std::string FormatPanelCsv(const std::vector<PanelRecord>& panel) {
  std::string out = "id,year,emp,status\n";
  for (const auto& r : panel) {
    out += std::to_string(r.id) + ',' + std::to_string(r.year) + ',' + FormatDouble(r.employment) +
           ',' + std::string(StatusName(r.status)) + '\n';
  }
  return out;
}

std::vector<PanelRecord> LoadPanelCsv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ParsePanelCsv(ss.str());
}

void WritePanelCsv(const std::vector<PanelRecord>& panel, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << FormatPanelCsv(panel);
}

void PanelPlan::Validate() const {
  if (!(total_epsilon > 0.0) || !std::isfinite(total_epsilon)) {
    throw ConfigError("panel plan: total epsilon must be positive and finite");
  }
  if (!(continuer_share > 0.0 && continuer_share < 1.0)) {
    throw ConfigError("panel plan: continuer share must lie in (0, 1)");
  }
  if (!(emp_lower < emp_upper)) throw ConfigError("panel plan: emp bounds out of order");
  if (!(continuer_cx >= 1.0)) throw ConfigError("panel plan: continuer C_X must be >= 1");
  if (!(step_scale > 0.0)) throw ConfigError("panel plan: step_scale must be positive");
  QuantileSchedule s{QuantileGrid(taus.empty() ? Taus20() : taus,
                                  main_taus.empty() ? DefaultMainTaus() : main_taus),
                     mode, shares};
  s.Validate();
}

namespace {

struct GroupFit {
  std::vector<QuantileFit> fits;
  std::vector<Allocation> ledger;
};

GroupFit FitGroup(std::shared_ptr<const Matrix> x, const std::vector<double>& y_raw,
                  const ColumnBounds& bounds, const QuantileSchedule& schedule, double epsilon,
                  const std::string& name, const MhConfig& mh_template, double step_scale,
                  std::uint64_t seed) {
  const std::vector<double> y_w = Winsorize(y_raw, bounds);
  ScheduleInput in;
  in.x = std::move(x);
  in.y = std::make_shared<Vector>(Eigen::Map<const Vector>(y_w.data(), static_cast<Eigen::Index>(y_w.size())));
  in.epsilon = epsilon;
  in.cx_bound = bounds.cx_bound;
  in.name = name;
  MhConfig mh = mh_template;
  mh.step_sizes = HeuristicStepSizes(y_w, in.x->cols());
  for (double& s : mh.step_sizes) s *= step_scale;
  mh.soft_lower = bounds.outcome_lower;
  mh.soft_upper = bounds.outcome_upper;
  mh.seed = DeriveSeed(seed, "mh/" + name);
  ScheduleResult r = RunSchedule(in, schedule, mh);
  return {std::move(r.fits), std::move(r.ledger)};
}

}  // namespace

PanelSynthesis SynthesizePanel(const std::vector<PanelRecord>& panel_in, const PanelPlan& plan,
                               const MhConfig& mh_template, std::uint64_t seed) {
  plan.Validate();
  ValidatePanel(panel_in);
  if (panel_in.empty()) throw DataError("panel: no records");
  const std::vector<PanelRecord> panel = SortPanel(panel_in);
  const QuantileSchedule schedule{
      QuantileGrid(plan.taus.empty() ? Taus20() : plan.taus,
                   plan.main_taus.empty() ? DefaultMainTaus() : plan.main_taus),
      plan.mode, plan.shares};

  std::map<int, std::vector<std::size_t>> rows_by_year;
  for (std::size_t i = 0; i < panel.size(); ++i) rows_by_year[panel[i].year].push_back(i);
  const int first_year = rows_by_year.begin()->first;

  BudgetTree budget("panel", plan.total_epsilon);
  Weights per_year;
  for (const auto& [year, rows] : rows_by_year) {
    per_year.emplace_back("year=" + std::to_string(year), 1.0 / static_cast<double>(rows_by_year.size()));
  }
  budget.Split(per_year);

  PanelSynthesis out;
  out.panel = panel;
  std::map<std::pair<std::int64_t, int>, std::size_t> index;
  for (std::size_t i = 0; i < panel.size(); ++i) index[{panel[i].id, panel[i].year}] = i;

  const ColumnBounds birth_bounds{1.0, plan.emp_lower, plan.emp_upper};
  const ColumnBounds cont_bounds{plan.continuer_cx, plan.emp_lower, plan.emp_upper};
  for (const auto& [year, rows] : rows_by_year) {
    std::vector<std::size_t> births;
    std::vector<std::size_t> conts;
    for (std::size_t i : rows) {
      (year == first_year || panel[i].status == PanelStatus::kBirth ? births : conts).push_back(i);
    }
    const std::string ykey = "year=" + std::to_string(year);
    BudgetTree& node = budget.child(ykey);
    if (!births.empty() && !conts.empty()) {
      node.Split({{"continuers", plan.continuer_share}, {"births", 1.0 - plan.continuer_share}});
    } else {
      node.Split({{births.empty() ? "continuers" : "births", 1.0}});
    }
    const std::string prefix = "panel/" + ykey + "/";

    if (!births.empty()) {
      std::vector<double> y;
      for (std::size_t i : births) y.push_back(panel[i].employment);
      auto x = std::make_shared<Matrix>(Matrix::Ones(static_cast<Eigen::Index>(y.size()), 1));
      GroupFit g = FitGroup(x, y, birth_bounds, schedule, node.child("births").epsilon(),
                            prefix + "births", mh_template, plan.step_scale, seed);
      const auto draws = SynthesizeColumn(g.fits, *x, birth_bounds, DeriveSeed(seed, "draw/" + prefix + "births"));
      for (std::size_t r = 0; r < births.size(); ++r) out.panel[births[r]].employment = draws[r];
      out.ledger.insert(out.ledger.end(), g.ledger.begin(), g.ledger.end());
    }
    if (!conts.empty()) {
      const Eigen::Index n = static_cast<Eigen::Index>(conts.size());
      Matrix design(n, 2);
      Matrix syn_design(n, 2);
      std::vector<double> y;
      for (Eigen::Index r = 0; r < n; ++r) {
        const auto& rec = panel[conts[static_cast<std::size_t>(r)]];
        const std::size_t prev = index.at({rec.id, year - 1});
        design(r, 0) = 1.0;
        design(r, 1) = std::clamp(panel[prev].employment, plan.emp_lower, plan.emp_upper);
        syn_design(r, 0) = 1.0;
        syn_design(r, 1) = out.panel[prev].employment;  // already synthesized
        y.push_back(rec.employment);
      }
      auto x = std::make_shared<Matrix>(ClipRowNorms(design, plan.continuer_cx));
      GroupFit g = FitGroup(x, y, cont_bounds, schedule, node.child("continuers").epsilon(),
                            prefix + "continuers", mh_template, plan.step_scale, seed);
      const auto draws = SynthesizeColumn(g.fits, syn_design, cont_bounds,
                                          DeriveSeed(seed, "draw/" + prefix + "continuers"));
      for (Eigen::Index r = 0; r < n; ++r) out.panel[conts[static_cast<std::size_t>(r)]].employment = draws[static_cast<std::size_t>(r)];
      out.ledger.insert(out.ledger.end(), g.ledger.begin(), g.ledger.end());
    }
  }
  budget.CheckConservation();
  if (!BudgetClose(LedgerTotal(out.ledger), plan.total_epsilon)) {
    throw NumericError("panel: ledger does not sum to the configured epsilon");
  }
  return out;
}

std::vector<PanelRecord> GenerateToyPanel(const ToyPanelOptions& o, std::uint64_t seed) {
  if (o.years < 1 || o.initial_establishments < 1) throw ConfigError("toy panel: need years and establishments");
  Rng rng = MakeRng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<PanelRecord> out;
  std::map<std::int64_t, double> alive;
  std::int64_t next_id = 1;
  auto born = [&](double mu, double sigma) {
    return std::min(o.emp_cap, std::round(std::exp(mu + sigma * normal(rng))) + 1.0);
  };
  for (int i = 0; i < o.initial_establishments; ++i) alive[next_id++] = born(2.5, 1.0);
  for (const auto& [id, emp] : alive) out.push_back({id, o.first_year, emp, PanelStatus::kBirth});

  for (int t = 1; t < o.years; ++t) {
    const int year = o.first_year + t;
    // Common business-cycle component.
    const double cycle = 0.02 + 0.06 * std::sin(2.0 * 3.14159265358979323846 * t / 8.0);
    std::map<std::int64_t, double> next;
    for (const auto& [id, emp] : alive) {
      if (unif(rng) < o.death_rate) continue;
      const double e = std::clamp(std::round(emp * std::exp(cycle + 0.2 * normal(rng))), 0.0, o.emp_cap);
      next[id] = e;
      out.push_back({id, year, e, PanelStatus::kContinuer});
    }
    std::poisson_distribution<int> births(o.birth_rate * static_cast<double>(alive.size()));
    const int nb = births(rng);
    for (int b = 0; b < nb; ++b) {
      const std::int64_t id = next_id++;
      next[id] = born(2.0, 0.9);
      out.push_back({id, year, next[id], PanelStatus::kBirth});
    }
    alive = std::move(next);
  }
  return SortPanel(std::move(out));
}

}  // namespace kngsynth
