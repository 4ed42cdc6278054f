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

#include "kngsynth/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <random>
#include <sstream>

#include "kngsynth/error.hpp"
#include "kngsynth/log.hpp"
#include "kngsynth/parallel.hpp"
#include "kngsynth/seeding.hpp"

namespace kngsynth {

SimulatedPair SimulateData(std::uint64_t seed, std::size_t n) {
  if (n < 1) throw ConfigError("simulate: n must be >= 1");
  auto draw = [n](std::uint64_t s) {
    Rng rng = MakeRng(s);
    std::exponential_distribution<double> exp01(0.1);
    std::vector<double> x1(n);
    std::vector<double> x2(n);
    std::vector<double> x3(n);
    for (std::size_t i = 0; i < n; ++i) {
      x1[i] = exp01(rng);
      x2[i] = 4.0 + 3.0 * x1[i] + exp01(rng);
      x3[i] = 3.0 + 2.0 * x1[i] + x2[i] + exp01(rng);
    }
    return Dataset({"X1", "X2", "X3"}, {std::move(x1), std::move(x2), std::move(x3)});
  };
  return {draw(DeriveSeed(seed, "train")), draw(DeriveSeed(seed, "test"))};
}

MhConfig ChainSettings::Template() const {
  MhConfig mh;
  mh.iterations = iterations;
  mh.burn_in = burn_in;
  return mh;
}

SynthesisPlan SimulationPlan(const SimulationPlanSettings& s, Method method,
                             const std::vector<std::string>& names) {
  const std::size_t p = names.size();
  if (p == 0) throw ConfigError("plan: no columns");
  if (s.shares.size() != p || s.cx.size() != p || s.lower.size() != p || s.upper.size() != p) {
    throw ConfigError("plan: shares, cx, lower and upper need one entry per column (" +
                      std::to_string(p) + ")");
  }
  if (!s.step_scale.empty() && s.step_scale.size() != p) {
    throw ConfigError("plan: step_scale needs one entry per column");
  }
  SynthesisPlan plan;
  plan.total_epsilon = s.epsilon;
  plan.nonprivate = !IsPrivate(method);
  const ConstraintMode mode = IsPrivate(method) ? ModeOf(method) : ConstraintMode{};
  for (std::size_t v = 0; v < p; ++v) {
    VariablePlan vp;
    vp.name = names[v];
    vp.predictors.assign(names.begin(), names.begin() + static_cast<std::ptrdiff_t>(v));
    vp.bounds = {s.cx[v], s.lower[v], s.upper[v]};
    vp.schedule = {QuantileGrid(s.taus, s.main_taus), mode,
                   v == 0 ? s.first_shares : s.regression_shares};
    vp.epsilon_share = s.shares[v];
    if (!s.step_scale.empty()) {
      if (!(s.step_scale[v] > 0.0)) throw ConfigError("plan: step_scale must be positive");
      vp.step_scale = s.step_scale[v];
    }
    plan.variables.push_back(std::move(vp));
  }
  return plan;
}

UtilityReport Evaluate(const Dataset& original, const Dataset& synthetic, const Dataset& test,
                       const EvalConfig& config, std::uint64_t seed) {
  const auto& names = original.names();
  UtilityReport r;
  const PmseResult woi = Pmse(original, synthetic, false, DeriveSeed(seed, "pmse-woi"));
  const PmseResult wi = Pmse(original, synthetic, true, DeriveSeed(seed, "pmse-wi"));
  r.pmse_woi = woi.pmse;
  r.pmse_wi = wi.pmse;
  r.classifier_woi = woi.classifier;
  r.classifier_wi = wi.classifier;
  r.wrt_ratio = WassersteinRatio(original, synthetic, config.wrt_swaps, DeriveSeed(seed, "wrt"),
                                 config.wrt_null)
                    .ratio;
  const std::size_t k = config.km_k == 0 ? original.cols() : config.km_k;
  r.km_score = KMarginal(original, synthetic, k, DeriveSeed(seed, "km")).score;

  if (names.size() >= 2) {
    LinearModel coef = config.coef_model;
    if (coef.response.empty()) coef = {names[1], {names[0]}};
    r.coef_diffs = StdCoefDiff(original, synthetic, coef);
    std::vector<LinearModel> models = config.nrmse_models;
    if (models.empty()) {
      for (std::size_t j = 1; j < names.size(); ++j) {
        models.push_back({names[j], std::vector<std::string>(names.begin(), names.begin() + static_cast<std::ptrdiff_t>(j))});
      }
    }
    for (const auto& m : models) r.nrmse.push_back(Nrmse(synthetic, test, m));
  }
  return r;
}

StudyResult RunSimulationStudy(const StudyConfig& config, const StudyProgress& progress) {
  if (config.reps < 1) throw ConfigError("study: reps must be >= 1");
  if (config.methods.empty()) throw ConfigError("study: no methods");
  const std::size_t m = config.methods.size();
  StudyResult result;
  result.rows.resize(static_cast<std::size_t>(config.reps) * m);
  const MhConfig mh = config.chain.Template();
  std::vector<SimulatedPair> data(static_cast<std::size_t>(config.reps));
  ParallelFor(data.size(), [&](std::size_t rep) {
    data[rep] = SimulateData(DeriveSeed(config.seed, "data", 0.0, rep), config.n);
  }, config.threads);

  ParallelFor(result.rows.size(), [&](std::size_t slot) {
    const std::size_t rep = slot / m;
    const Method method = config.methods[slot % m];
    StudyRow& row = result.rows[slot];
    row.rep = static_cast<int>(rep);
    row.method = method;
    row.report.method = std::string(MethodName(method));
    try {
      SynthesisPlan plan = SimulationPlan(config.plan, method);
      if (config.adjust_plan) config.adjust_plan(plan);
      const std::string stream = "synth/" + std::string(MethodName(method));
      const SynthesisResult syn =
          SynthesizeDataset(data[rep].train, plan, mh, DeriveSeed(config.seed, stream, 0.0, rep));
      for (const auto& run : syn.runs) row.crossings += run.crossings;
      row.ledger = syn.ledger;
      row.ledger_total = LedgerTotal(syn.ledger);
      row.report = Evaluate(data[rep].train, syn.synthetic, data[rep].test, config.eval,
                            DeriveSeed(config.seed, "eval/" + std::string(MethodName(method)), 0.0, rep));
      row.report.method = std::string(MethodName(method));
    } catch (const std::exception& e) {
      row.error = e.what();
      log::Warning("study: rep " + std::to_string(rep) + " " + std::string(MethodName(method)) +
                   " failed: " + e.what());
    }
    if (progress) progress(row);
  }, config.threads);
  return result;
}

namespace {

double MetricOf(const UtilityReport& r, const std::string& metric) {
  for (const auto& [name, value] : r.Values()) {
    if (name == metric) return value;
  }
  throw ConfigError("unknown metric " + metric);
}

}  // namespace

CellSummary Summarize(const StudyResult& result, Method method, const std::string& metric) {
  std::vector<double> v;
  for (const auto& row : result.rows) {
    if (row.method == method && row.error.empty()) v.push_back(MetricOf(row.report, metric));
  }
  CellSummary c;
  c.count = static_cast<int>(v.size());
  if (v.empty()) {
    c.mean = c.se = std::numeric_limits<double>::quiet_NaN();
    return c;
  }
  c.mean = Mean(v);
  c.se = v.size() > 1 ? SampleSd(v) / std::sqrt(static_cast<double>(v.size())) : 0.0;
  return c;
}

std::string StudyRowsCsv(const StudyResult& result) {
  std::size_t nc = 0;
  std::size_t nn = 0;
  for (const auto& row : result.rows) {
    nc = std::max(nc, row.report.coef_diffs.size());
    nn = std::max(nn, row.report.nrmse.size());
  }
  std::string out = "rep," + UtilityReport::CsvHeader(nc, nn) + ",crossings,ledger_total,error\n";
  for (const auto& row : result.rows) {
    UtilityReport r = row.report;
    r.coef_diffs.resize(nc, std::numeric_limits<double>::quiet_NaN());
    r.nrmse.resize(nn, std::numeric_limits<double>::quiet_NaN());
    out += std::to_string(row.rep) + ',' + r.CsvRow() + ',' + std::to_string(row.crossings) + ',' +
           FormatDouble(row.ledger_total) + ',' + (row.error.empty() ? "" : "failed") + '\n';
  }
  return out;
}

namespace {

std::string TableCsv(const StudyResult& result, const std::vector<Method>& methods,
                     const std::vector<std::pair<std::string, std::string>>& columns) {
  std::string out = "method";
  for (const auto& [metric, label] : columns) out += "," + label + "_mean," + label + "_se";
  out += ",reps\n";
  for (Method m : methods) {
    out += std::string(MethodName(m));
    int count = 0;
    for (const auto& [metric, label] : columns) {
      const CellSummary c = Summarize(result, m, metric);
      out += "," + FormatDouble(c.mean) + "," + FormatDouble(c.se);
      count = c.count;
    }
    out += "," + std::to_string(count) + "\n";
  }
  return out;
}

}  // namespace

std::string StudyTable1Csv(const StudyResult& result, const std::vector<Method>& methods) {
  return TableCsv(result, methods,
                  {{"pmse_woi", "pmse_woi"}, {"pmse_wi", "pmse_wi"}, {"wrt_ratio", "wrt"}, {"km_score", "km"}});
}

std::string StudyTable2Csv(const StudyResult& result, const std::vector<Method>& methods) {
  return TableCsv(result, methods,
                  {{"coef_diff_0", "int_diff"}, {"coef_diff_1", "slope_diff"}, {"nrmse_0", "nrmse_x2"},
                   {"nrmse_1", "nrmse_x3"}});
}

double TrueSweepIntercept(double tau) { return 4.0 - 10.0 * std::log1p(-tau); }

QuantileSchedule SweepSchedule(const SweepConfig& config, Method method, double share) {
  const ConstraintMode mode = ModeOf(method);
  QuantileSchedule s{QuantileGrid(config.taus, config.main_taus), mode, {}};
  if (mode.scheme == Scheme::kStepwise) {
    s.shares.median_share = share;
  } else if (mode.scheme == Scheme::kSandwich) {
    s.shares.anchor_share = share;
    // Median's cut of the anchor budget, as in the published sweep.
    s.shares.median_share = mode.slope_rule == SlopeRule::kFixed ? 0.6 : 0.8;
  }
  return s;
}

double SweepResult::MeanL2(Method method, double share) const {
  double s = 0.0;
  int c = 0;
  for (const auto& cell : cells) {
    if (cell.method == method && cell.share == share) {
      s += cell.mean_l2;
      ++c;
    }
  }
  return c ? s / c : std::numeric_limits<double>::quiet_NaN();
}

SweepResult RunBudgetSweep(const SweepConfig& config) {
  if (config.reps < 1) throw ConfigError("sweep: reps must be >= 1");
  if (config.share_grid.empty()) throw ConfigError("sweep: empty share grid");
  const MhConfig base = config.chain.Template();
  const std::size_t nm = config.methods.size();
  const std::size_t ns = config.share_grid.size();
  const std::size_t nt = config.taus.size();
  // l2[(rep * nm + method) * ns + share][tau]
  std::vector<std::vector<double>> l2(static_cast<std::size_t>(config.reps) * nm * ns);
  std::vector<std::vector<Allocation>> ledgers(l2.size());
  ParallelFor(l2.size(), [&](std::size_t slot) {
    const std::size_t rep = slot / (nm * ns);
    const Method method = config.methods[(slot / ns) % nm];
    const double share = config.share_grid[slot % ns];
    const SimulatedPair d = SimulateData(DeriveSeed(config.seed, "data", 0.0, rep), config.n);
    const Dataset two = d.train.select_columns({"X1", "X2"});
    const ColumnBounds bounds{config.cx, 0.0, config.upper};
    const std::vector<double> y_w = Winsorize(two.column("X2"), bounds);
    ScheduleInput in;
    in.x = std::make_shared<Matrix>(ClipRowNorms(BuildDesignMatrix(two, {"X1"}), config.cx));
    in.y = std::make_shared<Vector>(Eigen::Map<const Vector>(y_w.data(), static_cast<Eigen::Index>(y_w.size())));
    in.epsilon = config.epsilon;
    in.cx_bound = config.cx;
    in.name = "X2";
    MhConfig mh = base;
    mh.step_sizes = HeuristicStepSizes(y_w, 2);
    for (double& s : mh.step_sizes) s *= config.step_scale;
    mh.soft_lower = bounds.outcome_lower;
    mh.soft_upper = bounds.outcome_upper;
    mh.seed = DeriveSeed(config.seed, "sweep/" + std::string(MethodName(method)) + "/" + FormatDouble(share), 0.0, rep);
    const ScheduleResult r = RunSchedule(in, SweepSchedule(config, method, share), mh);
    auto& out = l2[slot];
    for (const auto& f : r.fits) {
      const double di = f.beta[0] - TrueSweepIntercept(f.tau);
      const double ds = f.beta[1] - kTrueSweepSlope;
      out.push_back(std::sqrt(di * di + ds * ds));
    }
    ledgers[slot] = r.ledger;
  }, config.threads);

  SweepResult res;
  for (std::size_t mi = 0; mi < nm; ++mi) {
    for (std::size_t si = 0; si < ns; ++si) {
      for (std::size_t ti = 0; ti < nt; ++ti) {
        std::vector<double> v;
        for (int rep = 0; rep < config.reps; ++rep) {
          v.push_back(l2[(static_cast<std::size_t>(rep) * nm + mi) * ns + si][ti]);
        }
        res.cells.push_back({config.methods[mi], config.share_grid[si], config.taus[ti], Mean(v), SampleSd(v)});
      }
    }
  }
  res.ledger = ledgers.back();
  return res;
}

std::string SweepCsv(const SweepResult& result) {
  std::string out = "method,share,tau,mean_l2,sd_l2\n";
  for (const auto& c : result.cells) {
    out += std::string(MethodName(c.method)) + "," + FormatDouble(c.share) + "," + FormatDouble(c.tau) +
           "," + FormatDouble(c.mean_l2) + "," + FormatDouble(c.sd_l2) + "\n";
  }
  return out;
}

std::string SweepSummaryCsv(const SweepResult& result, const SweepConfig& config) {
  std::string out = "method,share,mean_l2\n";
  for (Method m : config.methods) {
    for (double s : config.share_grid) {
      out += std::string(MethodName(m)) + "," + FormatDouble(s) + "," + FormatDouble(result.MeanL2(m, s)) + "\n";
    }
  }
  return out;
}

double PearsonCorrelation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw DataError("correlation: need two equal series of length >= 2");
  const double ma = Mean(a);
  const double mb = Mean(b);
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return sab / std::sqrt(saa * sbb);
}

namespace {

std::vector<SeriesPoint> Band(const std::vector<YearValue>& original,
                              const std::vector<std::vector<YearValue>>& versions) {
  std::vector<SeriesPoint> out;
  for (std::size_t t = 0; t < original.size(); ++t) {
    std::vector<double> v;
    for (const auto& s : versions) v.push_back(s.at(t).value);
    out.push_back({original[t].year, original[t].value, Mean(v), SampleSd(v)});
  }
  return out;
}

}  // namespace

PanelExperimentResult RunPanelExperiment(const std::vector<PanelRecord>& panel,
                                         const PanelExperimentConfig& config) {
  if (config.synthetic_versions < 1) throw ConfigError("panel: need at least one synthetic version");
  PanelExperimentResult res;
  const std::size_t nv = static_cast<std::size_t>(config.synthetic_versions);
  for (std::size_t v = 0; v < nv; ++v) res.seeds.push_back(DeriveSeed(config.seed, "panel-version", 0.0, v));
  res.synthetic.resize(nv);
  res.ledgers.resize(nv);
  const MhConfig mh = config.chain.Template();
  ParallelFor(nv, [&](std::size_t v) {
    PanelSynthesis s = SynthesizePanel(panel, config.plan, mh, res.seeds[v]);
    res.synthetic[v] = std::move(s.panel);
    res.ledgers[v] = std::move(s.ledger);
  }, config.threads);

  std::vector<std::vector<YearValue>> ge;
  std::vector<std::vector<YearValue>> jc;
  std::vector<std::vector<YearValue>> njc;
  for (const auto& s : res.synthetic) {
    ge.push_back(GrossEmployment(s));
    jc.push_back(JobCreationRate(s));
    njc.push_back(NetJobCreationRate(s));
  }
  const auto ge0 = GrossEmployment(panel);
  res.gross_employment = Band(ge0, ge);
  res.job_creation = Band(JobCreationRate(panel), jc);
  res.net_job_creation = Band(NetJobCreationRate(panel), njc);
  std::vector<double> orig;
  for (const auto& p : ge0) orig.push_back(p.value);
  for (const auto& s : ge) {
    std::vector<double> syn;
    for (const auto& p : s) syn.push_back(p.value);
    res.trend_correlation.push_back(PearsonCorrelation(orig, syn));
  }
  return res;
}

std::string SeriesCsv(const std::vector<SeriesPoint>& series) {
  std::string out = "year,original,mean,sd\n";
  for (const auto& p : series) {
    out += std::to_string(p.year) + "," + FormatDouble(p.original) + "," + FormatDouble(p.mean) + "," +
           FormatDouble(p.sd) + "\n";
  }
  return out;
}

}  // namespace kngsynth
