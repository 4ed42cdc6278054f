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

// kngsynth: simulate, synthesize, evaluate, budget-sweep and panel runs.
//
// Every command writes into --out:
//   synthetic/*.csv   released data
//   metrics/*.csv     utility tables and chain diagnostics
//   plots/*.csv       (x, mean, sd) series
//   run-manifest.yaml resolved config, seeds and epsilon ledgers
// Passing the manifest back through --config reproduces the CSVs.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "kngsynth/config.hpp"
#include "kngsynth/error.hpp"
#include "kngsynth/harness.hpp"
#include "kngsynth/log.hpp"
#include "kngsynth/seeding.hpp"

namespace fs = std::filesystem;
using namespace kngsynth;

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> epsilon;
  std::optional<int> reps;
  std::optional<std::size_t> n;
  std::optional<std::string> out;
  std::vector<std::string> methods;
  bool debug_trace = false;
  std::optional<unsigned> threads;
  std::optional<long> iterations;
  std::optional<long> burn_in;
  std::optional<std::string> input;
  std::optional<std::string> synthetic;
  std::optional<std::string> test;
  bool study = false;
  bool quiet = false;
};

void WriteText(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

RunConfig Resolve(Command command, const Flags& f) {
  RunConfig c = f.config.empty() ? RunConfig{} : LoadRunConfig(f.config);
  c.command = command;
  if (f.seed) c.seed = *f.seed;
  if (f.epsilon) c.epsilon = *f.epsilon;
  if (f.reps) c.reps = *f.reps;
  if (f.n) c.n = *f.n;
  if (f.out) c.out = *f.out;
  if (!f.methods.empty()) {
    c.methods.clear();
    for (const auto& m : f.methods) c.methods.push_back(ParseMethod(m));
  }
  if (f.debug_trace) c.debug_trace = true;
  if (f.threads) c.threads = *f.threads;
  if (f.iterations) c.chain.iterations = *f.iterations;
  if (f.burn_in) c.chain.burn_in = *f.burn_in;
  if (f.input) {
    if (command == Command::kPanel) {
      c.panel_input = *f.input;
    } else {
      c.input = *f.input;
    }
  }
  if (f.synthetic) c.synthetic = *f.synthetic;
  if (f.test) c.test = *f.test;
  if (f.study) c.study = true;
  if (command == Command::kPanel && !c.methods.empty()) {
    if (c.methods.size() != 1) throw ConfigError("panel: exactly one --method");
    c.panel_method = c.methods.front();
  }
  c.Resolve();
  return c;
}

void WriteManifest(const RunConfig& c, const ManifestExtras& extras) {
  WriteText(fs::path(c.out) / "run-manifest.yaml", EmitManifest(c, extras));
}

std::string FitsCsv(const std::vector<VariableRun>& runs) {
  std::size_t k = 0;
  for (const auto& r : runs) {
    for (const auto& f : r.fits) k = std::max<std::size_t>(k, static_cast<std::size_t>(f.beta.size()));
  }
  std::string out = "variable,tau";
  for (std::size_t j = 0; j < k; ++j) out += ",beta" + std::to_string(j);
  out += '\n';
  for (const auto& r : runs) {
    for (const auto& f : r.fits) {
      out += r.name + ',' + FormatDouble(f.tau);
      for (std::size_t j = 0; j < k; ++j) {
        out += ',';
        if (static_cast<Eigen::Index>(j) < f.beta.size()) out += FormatDouble(f.beta[static_cast<Eigen::Index>(j)]);
      }
      out += '\n';
    }
  }
  return out;
}

std::string ChainCsv(const std::vector<VariableRun>& runs) {
  std::string out =
      "variable,tau,proposed,accepted,rejected_bounds,rejected_constraint,restarts,acceptance_rate,"
      "step_sizes\n";
  for (const auto& r : runs) {
    std::string steps;
    for (double s : r.step_sizes) steps += (steps.empty() ? "" : " ") + FormatDouble(s);
    for (std::size_t i = 0; i < r.stats.size(); ++i) {
      const ChainStats& s = r.stats[i];
      out += r.name + ',' + FormatDouble(r.fits[i].tau) + ',' + std::to_string(s.proposed) + ',' +
             std::to_string(s.accepted) + ',' + std::to_string(s.rejected_bounds) + ',' +
             std::to_string(s.rejected_constraint) + ',' + std::to_string(s.restarts) + ',' +
             FormatDouble(s.acceptance_rate()) + ',' + steps + '\n';
    }
  }
  return out;
}

std::vector<Method> MethodsOr(const RunConfig& c, std::vector<Method> fallback) {
  return c.methods.empty() ? fallback : c.methods;
}

int RunSimulate(const RunConfig& c) {
  ManifestExtras extras;
  const fs::path data = fs::path(c.out) / "data";
  for (int rep = 0; rep < c.reps; ++rep) {
    const std::uint64_t s = DeriveSeed(c.seed, "data", 0.0, static_cast<std::uint64_t>(rep));
    const SimulatedPair pair = SimulateData(s, c.n);
    const std::string tag = "rep" + std::to_string(rep);
    WriteCsv(pair.train, data / ("train_" + tag + ".csv"));
    WriteCsv(pair.test, data / ("test_" + tag + ".csv"));
    extras.seeds.emplace_back("data/" + tag, s);
  }
  WriteManifest(c, extras);
  std::cout << "wrote " << c.reps << " train/test pairs to " << data.string() << '\n';
  return 0;
}

int RunSynthesize(const RunConfig& c) {
  Dataset original;
  ManifestExtras extras;
  if (c.input.empty()) {
    const std::uint64_t s = DeriveSeed(c.seed, "data");
    const SimulatedPair pair = SimulateData(s, c.n);
    original = pair.train;
    WriteCsv(pair.train, fs::path(c.out) / "data" / "train.csv");
    WriteCsv(pair.test, fs::path(c.out) / "data" / "test.csv");
    extras.seeds.emplace_back("data", s);
    extras.notes.push_back("no input given; synthesized a simulated training set");
  } else {
    original = LoadCsv(c.input);
  }
  const MhConfig mh = c.chain.Template();
  SynthesisOptions options;
  options.collect_traces = c.debug_trace;
  for (Method method : MethodsOr(c, {Method::kSandwichFixed})) {
    const std::string name(MethodName(method));
    SynthesisPlan plan = SimulationPlan(c.plan, method, original.names());
    ApplyStepSizes(c, plan);
    const std::uint64_t s = DeriveSeed(c.seed, "synth/" + name);
    const SynthesisResult res = SynthesizeDataset(original, plan, mh, s, options);
    WriteCsv(res.synthetic, fs::path(c.out) / "synthetic" / (name + ".csv"));
    WriteText(fs::path(c.out) / "metrics" / ("fits_" + name + ".csv"), FitsCsv(res.runs));
    WriteText(fs::path(c.out) / "metrics" / ("chains_" + name + ".csv"), ChainCsv(res.runs));
    if (c.debug_trace) {
      for (const auto& run : res.runs) {
        for (std::size_t i = 0; i < run.traces.size(); ++i) {
          WriteTraceCsv(fs::path(c.out) / "traces" / name /
                            (run.name + "_" + TauLabel(run.fits[i].tau) + ".csv"),
                        run.traces[i], run.stats[i]);
        }
      }
    }
    std::size_t crossings = 0;
    for (const auto& run : res.runs) crossings += run.crossings;
    extras.seeds.emplace_back("synth/" + name, s);
    if (!res.ledger.empty()) extras.ledgers.emplace_back(name, res.ledger);
    std::cout << name << ": " << res.synthetic.rows() << " rows, ledger total "
              << FormatDouble(LedgerTotal(res.ledger)) << ", crossings " << crossings << '\n';
  }
  WriteManifest(c, extras);
  return 0;
}

int RunEvaluate(const RunConfig& c, bool quiet) {
  ManifestExtras extras;
  if (c.study) {
    StudyConfig sc;
    sc.reps = c.reps;
    sc.n = c.n;
    sc.seed = c.seed;
    sc.methods = MethodsOr(c, AllMethods());
    sc.plan = c.plan;
    sc.chain = c.chain;
    sc.eval = c.eval;
    sc.threads = c.threads;
    if (!c.step_sizes.empty()) sc.adjust_plan = [&c](SynthesisPlan& p) { ApplyStepSizes(c, p); };
    const StudyResult res = RunSimulationStudy(sc, [quiet](const StudyRow& row) {
      if (quiet) return;
      std::cerr << "rep " << row.rep << ' ' << MethodName(row.method)
                << (row.error.empty() ? "" : " FAILED: " + row.error) << '\n';
    });
    const fs::path m = fs::path(c.out) / "metrics";
    WriteText(m / "study_rows.csv", StudyRowsCsv(res));
    WriteText(m / "table1.csv", StudyTable1Csv(res, sc.methods));
    WriteText(m / "table2.csv", StudyTable2Csv(res, sc.methods));
    int failed = 0;
    for (const auto& row : res.rows) {
      if (!row.error.empty()) {
        ++failed;
        extras.notes.push_back("rep " + std::to_string(row.rep) + " " + std::string(MethodName(row.method)) +
                               " failed: " + row.error);
      } else if (!row.ledger.empty()) {
        extras.ledgers.emplace_back("rep" + std::to_string(row.rep) + "/" + std::string(MethodName(row.method)),
                                    row.ledger);
      }
    }
    WriteManifest(c, extras);
    std::cout << StudyTable1Csv(res, sc.methods) << StudyTable2Csv(res, sc.methods);
    if (failed > 0) std::cerr << failed << " replication(s) failed; see run-manifest.yaml\n";
    return 0;
  }
  if (c.input.empty() || c.synthetic.empty() || c.test.empty()) {
    throw ConfigError("evaluate: need --input, --synthetic and --test, or --study");
  }
  const Dataset original = LoadCsv(c.input);
  const Dataset synthetic = LoadCsv(c.synthetic);
  const Dataset test = LoadCsv(c.test);
  const std::uint64_t s = DeriveSeed(c.seed, "eval");
  UtilityReport r = Evaluate(original, synthetic, test, c.eval, s);
  r.method = fs::path(c.synthetic).stem().string();
  WriteText(fs::path(c.out) / "metrics" / "utility.csv",
            UtilityReport::CsvHeader(r.coef_diffs.size(), r.nrmse.size()) + "\n" + r.CsvRow() + "\n");
  extras.seeds.emplace_back("eval", s);
  WriteManifest(c, extras);
  std::cout << r.Text();
  return 0;
}

int RunSweep(const RunConfig& c) {
  const SweepResult res = RunBudgetSweep(c.sweep);
  WriteText(fs::path(c.out) / "metrics" / "sweep.csv", SweepCsv(res));
  WriteText(fs::path(c.out) / "plots" / "sweep_l2.csv", SweepSummaryCsv(res, c.sweep));
  ManifestExtras extras;
  extras.ledgers.emplace_back("sweep/last-run", res.ledger);
  WriteManifest(c, extras);
  std::cout << SweepSummaryCsv(res, c.sweep);
  return 0;
}

int RunPanel(const RunConfig& c) {
  ManifestExtras extras;
  std::vector<PanelRecord> panel;
  if (c.panel_input.empty()) {
    const std::uint64_t s = DeriveSeed(c.seed, "toy-panel");
    panel = GenerateToyPanel(c.panel.toy, s);
    WritePanelCsv(panel, fs::path(c.out) / "data" / "panel.csv");
    extras.seeds.emplace_back("toy-panel", s);
  } else {
    panel = LoadPanelCsv(c.panel_input);
  }
  if (c.panel.shares_unspecified) {
    extras.notes.push_back("panel quantile budget shares have no published values; defaults used");
  }
  const PanelExperimentResult res = RunPanelExperiment(panel, c.panel);
  const fs::path out(c.out);
  for (std::size_t v = 0; v < res.synthetic.size(); ++v) {
    WritePanelCsv(res.synthetic[v], out / "synthetic" / ("panel_v" + std::to_string(v) + ".csv"));
    extras.seeds.emplace_back("panel/v" + std::to_string(v), res.seeds[v]);
    extras.ledgers.emplace_back("panel/v" + std::to_string(v), res.ledgers[v]);
  }
  WriteText(out / "plots" / "gross_employment.csv", SeriesCsv(res.gross_employment));
  WriteText(out / "plots" / "job_creation.csv", SeriesCsv(res.job_creation));
  WriteText(out / "plots" / "net_job_creation.csv", SeriesCsv(res.net_job_creation));
  std::string corr = "version,trend_correlation\n";
  for (std::size_t v = 0; v < res.trend_correlation.size(); ++v) {
    corr += std::to_string(v) + ',' + FormatDouble(res.trend_correlation[v]) + '\n';
  }
  WriteText(out / "metrics" / "trend_correlation.csv", corr);
  WriteManifest(c, extras);
  std::cout << corr;
  return 0;
}

void AddCommon(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "YAML config or a previous run-manifest.yaml")
      ->check(CLI::ExistingFile);
  sub->add_option("--seed", f.seed, "User seed");
  sub->add_option("--epsilon", f.epsilon, "Total privacy budget");
  sub->add_option("--reps", f.reps, "Replications");
  sub->add_option("--n", f.n, "Rows per simulated dataset");
  sub->add_option("--out", f.out, "Output directory");
  sub->add_option("--method", f.methods, "Method name; repeatable");
  sub->add_flag("--debug-trace", f.debug_trace, "Write MH traces and chain diagnostics");
  sub->add_option("--threads", f.threads, "Worker threads; 0 = hardware");
  sub->add_option("--iterations", f.iterations, "MH iterations per chain");
  sub->add_option("--burn-in", f.burn_in, "MH burn-in");
  sub->add_flag("--quiet", f.quiet, "Only warnings on stderr");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentially private synthetic data via KNG quantile regression"};
  app.require_subcommand(1);
  Flags f;
  CLI::App* simulate = app.add_subcommand("simulate", "Write simulated train/test pairs");
  CLI::App* synthesize = app.add_subcommand("synthesize", "Synthesize a dataset");
  CLI::App* evaluate = app.add_subcommand("evaluate", "Utility metrics, or the full study with --study");
  CLI::App* sweep = app.add_subcommand("budget-sweep", "L2 distance against median/anchor share");
  CLI::App* panel = app.add_subcommand("panel", "Panel synthesis with job-flow series");
  for (CLI::App* sub : {simulate, synthesize, evaluate, sweep, panel}) AddCommon(sub, f);
  synthesize->add_option("--input", f.input, "Original CSV; simulated when absent");
  panel->add_option("--input", f.input, "Panel CSV (id,year,emp,status); toy panel when absent");
  evaluate->add_option("--input", f.input, "Original CSV");
  evaluate->add_option("--synthetic", f.synthetic, "Synthetic CSV");
  evaluate->add_option("--test", f.test, "Holdout CSV for NRMSE");
  evaluate->add_flag("--study", f.study, "Run the replicated simulation study");

  CLI11_PARSE(app, argc, argv);

  try {
    if (f.quiet) log::SetThreshold(log::Level::kWarning);
    if (simulate->parsed()) return RunSimulate(Resolve(Command::kSimulate, f));
    if (synthesize->parsed()) return RunSynthesize(Resolve(Command::kSynthesize, f));
    if (evaluate->parsed()) return RunEvaluate(Resolve(Command::kEvaluate, f), f.quiet);
    if (sweep->parsed()) return RunSweep(Resolve(Command::kBudgetSweep, f));
    if (panel->parsed()) return RunPanel(Resolve(Command::kPanel, f));
  } catch (const std::exception& e) {
    std::cerr << "kngsynth: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
