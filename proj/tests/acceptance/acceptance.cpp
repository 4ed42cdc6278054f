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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero when any line fails.

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "kngsynth/config.hpp"
#include "kngsynth/harness.hpp"
#include "kngsynth/kng.hpp"
#include "kngsynth/log.hpp"
#include "kngsynth/panel.hpp"
#include "kngsynth/quantile_regression.hpp"
#include "kngsynth/seeding.hpp"
#include "kngsynth/synthesizer.hpp"
#include "kngsynth/utility.hpp"

namespace fs = std::filesystem;
using namespace kngsynth;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_failures = 0;
std::set<std::string> g_only;  // criteria named on the command line; empty runs all

bool Selected(const std::string& id) { return g_only.empty() || g_only.count(id) > 0; }

void Report(const std::string& id, const std::string& title, const std::function<Outcome()>& body) {
  if (!Selected(id)) return;
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++g_failures;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f s", secs);
  std::cout << (o.pass ? "PASS" : "FAIL") << "  " << id << " " << title << ": " << o.detail << " ["
            << buf << "]" << std::endl;
}

std::string Fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

// ---- 1: sampler against a gridded density ---------------------------------

Outcome SamplerTv() {
  Rng rng = MakeRng(101);
  std::normal_distribution<double> z(0.0, 1.0);
  const int n = 50;
  Vector y(n);
  for (double& v : y) v = z(rng);
  const Matrix x = Matrix::Ones(n, 1);
  const KngTarget target(x, y, 0.5, 1.0, 1.0);

  const double lo = y.minCoeff() - 2.0;
  const double hi = y.maxCoeff() + 2.0;
  const int grid = 10001;
  const double h = (hi - lo) / (grid - 1);
  std::vector<double> pts(grid);
  std::vector<double> dens(grid);
  double peak = -INFINITY;
  for (int i = 0; i < grid; ++i) {
    pts[i] = lo + h * i;
    Vector th(1);
    th << pts[i];
    dens[i] = LogDensity(th, target);
    peak = std::max(peak, dens[i]);
  }
  for (double& d : dens) d = std::exp(d - peak);
  // Trapezoid CDF, then edges of 20 equal-probability bins.
  std::vector<double> cdf(grid, 0.0);
  for (int i = 1; i < grid; ++i) cdf[i] = cdf[i - 1] + 0.5 * h * (dens[i] + dens[i - 1]);
  for (double& c : cdf) c /= cdf.back();
  const int bins = 20;
  std::vector<double> edges;
  for (int b = 1; b < bins; ++b) {
    const double p = static_cast<double>(b) / bins;
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), p);
    const auto i = static_cast<std::size_t>(it - cdf.begin());
    const double w = (p - cdf[i - 1]) / (cdf[i] - cdf[i - 1]);
    edges.push_back(pts[i - 1] + w * h);
  }

  const long draws = 10000;
  const long thin = 20;
  MhConfig mh;
  mh.step_sizes = {0.5};
  mh.burn_in = 5000;
  mh.iterations = mh.burn_in + draws * thin;
  mh.seed = 7;
  mh.soft_lower = lo;
  mh.soft_upper = hi;
  std::vector<Vector> trace;
  ChainOutput out;
  out.trace = &trace;
  out.thin = thin;
  Vector init(1);
  init << 0.0;
  SampleAmh(target, mh, init, {}, &out);
  std::vector<double> count(bins, 0.0);
  for (const Vector& t : trace) {
    const auto b = std::upper_bound(edges.begin(), edges.end(), t[0]) - edges.begin();
    count[static_cast<std::size_t>(b)] += 1.0;
  }
  double tv = 0.0;
  for (double c : count) tv += std::abs(c / static_cast<double>(trace.size()) - 1.0 / bins);
  tv *= 0.5;
  return {tv <= 0.05 && static_cast<long>(trace.size()) == draws,
          "TV over 20 equal-mass bins = " + Fmt(tv) + " (<= 0.05) from " +
              std::to_string(trace.size()) + " draws thinned by " + std::to_string(thin) +
              ", acceptance " + Fmt(out.stats.acceptance_rate(), 3)};
}

// ---- 2: QR against a grid search ------------------------------------------

double GridMinimum(const Matrix& x, const Vector& y, double tau) {
  const double xr = std::max(x.col(1).maxCoeff() - x.col(1).minCoeff(), 1e-9);
  const double yr = std::max(y.maxCoeff() - y.minCoeff(), 1e-9);
  double c0 = 0.5 * (y.maxCoeff() + y.minCoeff());
  double c1 = 0.0;
  double w0 = yr + 2.0 * yr / xr * x.col(1).cwiseAbs().maxCoeff();
  double w1 = 2.0 * yr / xr;
  double best = INFINITY;
  const int m = 400;
  for (int pass = 0; pass < 2; ++pass) {
    double b0 = c0;
    double b1 = c1;
    for (int i = 0; i <= m; ++i) {
      for (int j = 0; j <= m; ++j) {
        Vector b(2);
        b << c0 - w0 + 2.0 * w0 * i / m, c1 - w1 + 2.0 * w1 * j / m;
        const double v = CheckObjective(x, y, b, tau);
        if (v < best) {
          best = v;
          b0 = b[0];
          b1 = b[1];
        }
      }
    }
    c0 = b0;
    c1 = b1;
    w0 *= 4.0 / m;
    w1 *= 4.0 / m;
  }
  return best;
}

Outcome QrOracle() {
  Rng rng = MakeRng(202);
  std::uniform_int_distribution<int> size(5, 50);
  std::uniform_real_distribution<double> taus(0.05, 0.95);
  std::exponential_distribution<double> e(0.1);
  int ok = 0;
  double worst = -INFINITY;
  for (int inst = 0; inst < 50; ++inst) {
    const int n = size(rng);
    Matrix x(n, 2);
    Vector y(n);
    for (int i = 0; i < n; ++i) {
      x(i, 0) = 1.0;
      x(i, 1) = e(rng);
      y[i] = 4.0 + 3.0 * x(i, 1) + e(rng);
    }
    const double tau = taus(rng);
    const double fit = CheckObjective(x, y, FitNonprivate(x, y, tau).beta, tau);
    const double grid = GridMinimum(x, y, tau);
    worst = std::max(worst, fit - grid);
    if (fit <= grid + 1e-6) ++ok;
  }
  return {ok == 50, std::to_string(ok) + "/50 fits at or below the grid minimum + 1e-6; max(fit - grid) = " +
                        Fmt(worst, 3)};
}

// ---- 3-5: the simulation study --------------------------------------------

const std::vector<Method> kExtended{Method::kStepwiseFixed, Method::kStepwiseVarying,
                                    Method::kSandwichFixed, Method::kSandwichVarying};

Outcome Crossings(const StudyResult& r, int reps) {
  std::map<Method, int> runs_with;
  std::map<Method, int> ok;
  std::string failed;
  for (const auto& row : r.rows) {
    if (!row.error.empty()) {
      failed += " " + std::string(MethodName(row.method)) + "#" + std::to_string(row.rep);
      continue;
    }
    ++ok[row.method];
    if (row.crossings > 0) ++runs_with[row.method];
  }
  bool pass = failed.empty();
  std::string d;
  for (Method m : kExtended) {
    pass = pass && ok[m] == reps && runs_with[m] == 0;
    d += std::string(MethodName(m)) + " " + std::to_string(runs_with[m]) + "/" + std::to_string(ok[m]) + "; ";
  }
  d += "independent " + std::to_string(runs_with[Method::kIndependent]) + "/" +
       std::to_string(ok[Method::kIndependent]) + " runs with crossings";
  if (!failed.empty()) d += "; failed runs:" + failed;
  return {pass, d};
}

Outcome Table1(const StudyResult& r, double minutes) {
  const CellSummary ip = Summarize(r, Method::kIndependent, "pmse_woi");
  const CellSummary ik = Summarize(r, Method::kIndependent, "km_score");
  bool pass = ik.mean < 250.0 && minutes <= 30.0;
  std::string d = "independent pMSE " + Fmt(ip.mean) + ", KM " + Fmt(ik.mean) + "; ";
  for (Method m : kExtended) {
    const CellSummary p = Summarize(r, m, "pmse_woi");
    const CellSummary k = Summarize(r, m, "km_score");
    pass = pass && p.mean < ip.mean && k.mean > 400.0;
    d += std::string(MethodName(m)) + " pMSE " + Fmt(p.mean) + ", KM " + Fmt(k.mean) + "; ";
  }
  d += "study " + Fmt(minutes, 3) + " min";
  return {pass, d};
}

Outcome Table2(const StudyResult& r) {
  const double x2 = Summarize(r, Method::kNonprivate, "nrmse_0").mean;
  const double x3 = Summarize(r, Method::kNonprivate, "nrmse_1").mean;
  bool pass = x2 >= 0.30 && x2 <= 0.34 && x3 >= 0.18 && x3 <= 0.21;
  std::string d = "non-private NRMSE X2 " + Fmt(x2) + " X3 " + Fmt(x3) + "; X2 relative gap:";
  for (Method m : kExtended) {
    const double v = Summarize(r, m, "nrmse_0").mean;
    const double rel = std::abs(v - x2) / x2;
    pass = pass && rel <= 0.15;
    d += " " + std::string(MethodName(m)) + " " + Fmt(100.0 * rel, 3) + "%";
  }
  return {pass, d};
}

// ---- 6: budget sweep -------------------------------------------------------

// The sweep as the CLI's budget-sweep command runs it by default.
Outcome Sweep() {
  RunConfig rc;
  rc.command = Command::kBudgetSweep;
  rc.Resolve();
  const SweepConfig& c = rc.sweep;
  const SweepResult r = RunBudgetSweep(c);
  const double a = r.MeanL2(Method::kStepwiseFixed, 0.05);
  const double b = r.MeanL2(Method::kStepwiseFixed, 0.2);
  const double d = r.MeanL2(Method::kStepwiseFixed, 0.4);
  return {b < a && (b - d) < (a - b),
          "seed " + std::to_string(c.seed) + ", mean L2 at 5% " + Fmt(a) + ", 20% " + Fmt(b) + ", 40% " + Fmt(d) + "; gain 5->20 " +
              Fmt(a - b, 3) + ", 20->40 " + Fmt(b - d, 3)};
}

// ---- 7: metric identities -------------------------------------------------

struct Rates {
  int year;
  double jc;
  double jd;
};

// Straight from the definitions: every id present in either year, growth
// counted as creation and shrinkage as destruction, births and exits
// included, over the average of the two years' sizes.
std::vector<Rates> FlowOracle(const std::vector<PanelRecord>& p) {
  std::map<int, std::map<std::int64_t, double>> by;
  for (const auto& r : p) by[r.year][r.id] = r.employment;
  std::vector<Rates> out;
  for (const auto& [year, cur] : by) {
    if (year == by.begin()->first) continue;
    const auto pit = by.find(year - 1);
    std::set<std::int64_t> ids;
    for (const auto& kv : cur) ids.insert(kv.first);
    if (pit != by.end()) for (const auto& kv : pit->second) ids.insert(kv.first);
    double c = 0.0, d = 0.0, z = 0.0;
    for (std::int64_t id : ids) {
      const double now = cur.count(id) ? cur.at(id) : 0.0;
      const double before = pit != by.end() && pit->second.count(id) ? pit->second.at(id) : 0.0;
      c += std::max(now - before, 0.0);
      d += std::max(before - now, 0.0);
      z += 0.5 * (now + before);
    }
    out.push_back({year, c / z, d / z});
  }
  return out;
}

Outcome Identities() {
  const Dataset d = SimulateData(303, 5000).train;
  const double p_woi = Pmse(d, d, false, 1).pmse;
  const double p_wi = Pmse(d, d, true, 1).pmse;
  const double km = KMarginal(d, d, d.cols(), 1).score;
  const double wrt = WassersteinRatio(d, d, 1000, 1).ratio;
  int mismatches = 0;
  int years = 0;
  for (std::uint64_t s = 1; s <= 5; ++s) {
    const auto panel = GenerateToyPanel(ToyPanelOptions{}, DeriveSeed(s, "toy-panel"));
    const auto jc = JobCreationRate(panel);
    const auto jd = JobDestructionRate(panel);
    const auto oracle = FlowOracle(panel);
    if (jc.size() != oracle.size() || jd.size() != oracle.size()) {
      ++mismatches;
      continue;
    }
    for (std::size_t i = 0; i < oracle.size(); ++i) {
      ++years;
      if (jc[i].year != oracle[i].year || jc[i].value != oracle[i].jc || jd[i].value != oracle[i].jd) {
        ++mismatches;
      }
    }
  }
  const bool pass = p_woi <= 1e-6 && p_wi <= 1e-6 && km >= 999.9 && wrt == 0.0 && mismatches == 0;
  return {pass, "pMSE(d,d) " + Fmt(p_woi, 3) + " / " + Fmt(p_wi, 3) + ", KM(d,d) " + Fmt(km, 6) +
                    ", WRT(d,d) " + Fmt(wrt) + ", JC/JD exact on " + std::to_string(years) +
                    " toy-panel years with " + std::to_string(mismatches) + " mismatches"};
}

// ---- 8, 9: CLI runs and manifests -----------------------------------------

#ifdef KNGSYNTH_CLI_PATH
const char* kCli = KNGSYNTH_CLI_PATH;
#else
const char* kCli = nullptr;
#endif

struct CliCase {
  std::string command;
  std::string args;
  std::string yaml;  // optional config written next to the outputs
};

const std::vector<CliCase> kCases{
    {"simulate", "--reps 2 --n 300", ""},
    {"synthesize",
     "--n 500 --iterations 400 --burn-in 200 --method nonprivate --method stepwise-fixed "
     "--method sandwich-fixed --method sandwich-varying --method independent",
     ""},
    {"evaluate", "--study --reps 2 --n 300 --iterations 300 --burn-in 100 --method nonprivate "
                 "--method stepwise-varying",
     ""},
    {"budget-sweep", "--reps 2 --n 500 --iterations 400 --burn-in 200", ""},
    {"panel", "--iterations 300 --burn-in 150",
     "panel:\n  versions: 2\n  toy: {years: 6, initial_establishments: 200}\n"},
};

fs::path WorkDir() {
  const fs::path p = fs::temp_directory_path() / "kngsynth-acceptance";
  return p;
}

bool RunCli(const std::string& args) {
  const std::string cmd = std::string(kCli) + " " + args + " --quiet > /dev/null 2>&1";
  return std::system(cmd.c_str()) == 0;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Runs every case once from flags; returns false if any invocation failed.
bool FirstRuns(std::string& detail) {
  std::error_code ec;
  fs::remove_all(WorkDir(), ec);
  fs::create_directories(WorkDir());
  for (const auto& c : kCases) {
    const fs::path out = WorkDir() / (c.command + "-a");
    std::string args = c.command + " " + c.args + " --out " + out.string();
    if (!c.yaml.empty()) {
      const fs::path cfg = WorkDir() / (c.command + ".yaml");
      std::ofstream(cfg) << c.yaml;
      args += " --config " + cfg.string();
    }
    if (!RunCli(args)) {
      detail = c.command + " failed";
      return false;
    }
  }
  return true;
}

Outcome Determinism() {
  if (kCli == nullptr) return {false, "CLI not built"};
  std::string d;
  int files = 0;
  int differ = 0;
  for (const auto& c : kCases) {
    const fs::path a = WorkDir() / (c.command + "-a");
    const fs::path b = WorkDir() / (c.command + "-b");
    if (!RunCli(c.command + " --config " + (a / "run-manifest.yaml").string() + " --out " + b.string())) {
      return {false, c.command + " replay failed"};
    }
    int here = 0;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
      if (e.path().extension() != ".csv") continue;
      const fs::path other = b / fs::relative(e.path(), a);
      ++files;
      ++here;
      if (!fs::exists(other) || Slurp(e.path()) != Slurp(other)) {
        ++differ;
        d += " " + fs::relative(e.path(), WorkDir()).string();
      }
    }
    if (here == 0) return {false, c.command + " wrote no CSVs"};
  }
  return {differ == 0, std::to_string(files) + " CSVs across " + std::to_string(kCases.size()) +
                           " commands replayed from manifests, " + std::to_string(differ) +
                           " differ" + d};
}

double ConfiguredTotal(const RunConfig& c) {
  switch (c.command) {
    case Command::kBudgetSweep:
      return c.sweep.epsilon;
    case Command::kPanel:
      return c.panel.plan.total_epsilon;
    default:
      return c.plan.epsilon;
  }
}

struct LedgerCheck {
  int runs = 0;
  int bad = 0;
  std::string detail;
  void Add(const std::string& label, const std::vector<Allocation>& ledger, double total) {
    ++runs;
    if (!BudgetClose(LedgerTotal(ledger), total)) {
      ++bad;
      detail += " " + label;
    }
  }
};

Outcome Ledger(const StudyResult& study) {
  LedgerCheck chk;
  for (const auto& row : study.rows) {
    if (!IsPrivate(row.method) || !row.error.empty()) continue;
    chk.Add("study/" + std::string(MethodName(row.method)) + "#" + std::to_string(row.rep), row.ledger,
            1.0);
  }
  if (kCli != nullptr) {
    for (const auto& c : kCases) {
      const fs::path m = WorkDir() / (c.command + "-a") / "run-manifest.yaml";
      RunConfig rc = LoadRunConfig(m);
      rc.Resolve();
      const double total = ConfiguredTotal(rc);
      const YAML::Node doc = YAML::LoadFile(m.string());
      for (const auto& run : doc["ledgers"]) {
        std::vector<Allocation> ledger;
        for (const auto& leaf : run["leaves"]) {
          double v = 0.0;
          if (!ParseDouble(leaf[1].as<std::string>(), v)) v = NAN;
          ledger.push_back({leaf[0].as<std::string>(), v});
        }
        chk.Add(c.command + "/" + run["run"].as<std::string>(), ledger, total);
      }
    }
  }
  // Fixed-slope fits share the median's slopes bit for bit.
  const SimulatedPair data = SimulateData(DeriveSeed(20240601, "data", 0.0, 0), 5000);
  int fits = 0;
  int slope_bad = 0;
  for (Method m : {Method::kStepwiseFixed, Method::kSandwichFixed}) {
    const SynthesisResult r =
        SynthesizeDataset(data.train, SimulationPlan(SimulationPlanSettings{}, m), ChainSettings{}.Template(), 5);
    chk.Add("synth/" + std::string(MethodName(m)), r.ledger, 1.0);
    for (const auto& run : r.runs) {
      const QuantileFit* median = nullptr;
      for (const auto& f : run.fits) if (f.tau == 0.5) median = &f;
      for (const auto& f : run.fits) {
        ++fits;
        const auto k = f.beta.size();
        if (median == nullptr || k < 1 || f.beta.tail(k - 1) != median->beta.tail(k - 1)) ++slope_bad;
      }
    }
  }
  return {chk.bad == 0 && slope_bad == 0,
          std::to_string(chk.runs - chk.bad) + "/" + std::to_string(chk.runs) +
              " ledgers sum to the configured total within 1e-12 relative;" + chk.detail + " " +
              std::to_string(fits - slope_bad) + "/" + std::to_string(fits) +
              " fixed-slope fits carry the median slopes exactly"};
}

// ---- panel note -----------------------------------------------------------

Outcome PanelTrend() {
  RunConfig c;
  c.command = Command::kPanel;
  c.Resolve();
  const auto panel = GenerateToyPanel(c.panel.toy, DeriveSeed(c.seed, "toy-panel"));
  const PanelExperimentResult r = RunPanelExperiment(panel, c.panel);
  double lo = INFINITY;
  std::string d;
  for (double v : r.trend_correlation) {
    lo = std::min(lo, v);
    d += " " + Fmt(v, 3);
  }
  return {r.trend_correlation.size() == 5 && lo >= 0.8,
          "gross-employment trend correlation per version:" + d + " (min " + Fmt(lo, 3) +
              " >= 0.8) at eps = " + Fmt(c.panel.plan.total_epsilon)};
}

}  // namespace

int main(int argc, char** argv) {
  log::SetThreshold(log::Level::kError);
  for (int i = 1; i < argc; ++i) g_only.insert(argv[i]);
  std::cout << "kngsynth acceptance suite" << std::endl;

  Report("1", "sampler total variation", SamplerTv);
  Report("2", "non-private QR vs grid search", QrOracle);

  StudyConfig study;
  const auto t0 = std::chrono::steady_clock::now();
  StudyResult sr;
  if (Selected("3") || Selected("4") || Selected("5") || Selected("8")) sr = RunSimulationStudy(study);
  const double minutes = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
  Report("3", "no crossings for the extended methods", [&] { return Crossings(sr, study.reps); });
  Report("4", "general utility ordering", [&] { return Table1(sr, minutes); });
  Report("5", "specific utility anchors", [&] { return Table2(sr); });
  Report("6", "budget sweep trend", Sweep);
  Report("7", "metric identities", Identities);

  std::string cli_detail;
  const bool cli_ok = (Selected("8") || Selected("9")) && kCli != nullptr && FirstRuns(cli_detail);
  Report("8", "privacy ledger", [&] {
    if (!cli_ok) return Outcome{false, "CLI runs failed: " + cli_detail};
    return Ledger(sr);
  });
  Report("9", "determinism", [&] {
    if (!cli_ok) return Outcome{false, "CLI runs failed: " + cli_detail};
    return Determinism();
  });
  Report("panel", "trend correlation on toy panels", PanelTrend);

  std::cout << (g_failures == 0 ? "all criteria passed" : std::to_string(g_failures) + " criteria failed")
            << std::endl;
  return g_failures == 0 ? 0 : 1;
}
