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

#include "kngsynth/config.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

#include "kngsynth/error.hpp"

namespace kngsynth {

std::string_view CommandName(Command c) {
  switch (c) {
    case Command::kSimulate:
      return "simulate";
    case Command::kSynthesize:
      return "synthesize";
    case Command::kEvaluate:
      return "evaluate";
    case Command::kBudgetSweep:
      return "budget-sweep";
    case Command::kPanel:
      return "panel";
  }
  return "unknown";
}

Command ParseCommand(std::string_view name) {
  for (Command c : {Command::kSimulate, Command::kSynthesize, Command::kEvaluate,
                    Command::kBudgetSweep, Command::kPanel}) {
    if (CommandName(c) == name) return c;
  }
  throw ConfigError("unknown command '" + std::string(name) + "'");
}

void RunConfig::Resolve() {
  if (reps < 1) throw ConfigError("config: reps must be >= 1");
  if (n < 1) throw ConfigError("config: n must be >= 1");
  if (epsilon) {
    if (!(*epsilon > 0.0)) throw ConfigError("config: epsilon must be positive");
    switch (command) {
      case Command::kBudgetSweep:
        sweep.epsilon = *epsilon;
        break;
      case Command::kPanel:
        panel.plan.total_epsilon = *epsilon;
        break;
      default:
        plan.epsilon = *epsilon;
    }
  }
  sweep.reps = reps;
  sweep.n = n;
  sweep.seed = seed;
  sweep.chain = chain;
  sweep.threads = threads;
  if (command == Command::kBudgetSweep && !methods.empty()) sweep.methods = methods;
  panel.seed = seed;
  panel.chain = chain;
  panel.threads = threads;
  panel.plan.mode = ModeOf(panel_method);
}

namespace {

double AsDouble(const YAML::Node& n, const std::string& key) {
  double v = 0.0;
  if (!n.IsScalar() || !ParseDouble(n.as<std::string>(), v)) {
    throw ConfigError("config: " + key + " must be a number");
  }
  return v;
}

std::vector<double> AsDoubles(const YAML::Node& n, const std::string& key) {
  if (!n.IsSequence()) throw ConfigError("config: " + key + " must be a list of numbers");
  std::vector<double> out;
  for (const auto& e : n) out.push_back(AsDouble(e, key));
  return out;
}

template <typename T>
T AsInt(const YAML::Node& n, const std::string& key) {
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError("config: " + key + " must be an integer");
  }
}

bool AsBool(const YAML::Node& n, const std::string& key) {
  try {
    return n.as<bool>();
  } catch (const YAML::Exception&) {
    throw ConfigError("config: " + key + " must be true or false");
  }
}

std::string AsString(const YAML::Node& n, const std::string& key) {
  if (!n.IsScalar()) throw ConfigError("config: " + key + " must be a string");
  return n.as<std::string>();
}

void RequireKnown(const YAML::Node& map, const std::set<std::string>& known, const std::string& where) {
  if (!map.IsMap()) throw ConfigError("config: " + where + " must be a mapping");
  for (const auto& kv : map) {
    const std::string key = kv.first.as<std::string>();
    if (!known.count(key)) throw ConfigError("config: unknown key '" + key + "' in " + where);
  }
}

BudgetShares ParseShares(const YAML::Node& n, BudgetShares s, const std::string& key) {
  RequireKnown(n, {"median", "anchors"}, key);
  if (n["median"]) s.median_share = AsDouble(n["median"], key + ".median");
  if (n["anchors"]) s.anchor_share = AsDouble(n["anchors"], key + ".anchors");
  return s;
}

WrtNull ParseWrtNull(const std::string& s) {
  if (s == "single-swap") return WrtNull::kSingleSwap;
  if (s == "permutation") return WrtNull::kPermutation;
  throw ConfigError("config: eval.wrt_null must be single-swap or permutation");
}

std::string_view WrtNullName(WrtNull w) {
  return w == WrtNull::kSingleSwap ? "single-swap" : "permutation";
}

}  // namespace

RunConfig ParseRunConfig(std::string_view yaml) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml));
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config: invalid YAML: ") + e.what());
  }
  RunConfig c;
  if (root.IsNull()) return c;
  RequireKnown(root,
               {"command", "seed", "epsilon", "reps", "n", "out", "methods", "debug_trace", "threads",
                "chain", "plan", "step_sizes", "eval", "input", "synthetic", "test", "study", "sweep",
                "panel", "seeds", "ledgers", "notes"},
               "top level");
  if (root["command"]) c.command = ParseCommand(AsString(root["command"], "command"));
  if (root["seed"]) c.seed = AsInt<std::uint64_t>(root["seed"], "seed");
  if (root["epsilon"]) c.epsilon = AsDouble(root["epsilon"], "epsilon");
  if (root["reps"]) c.reps = AsInt<int>(root["reps"], "reps");
  if (root["n"]) c.n = AsInt<std::size_t>(root["n"], "n");
  if (root["out"]) c.out = AsString(root["out"], "out");
  if (root["methods"]) {
    if (!root["methods"].IsSequence()) throw ConfigError("config: methods must be a list");
    for (const auto& m : root["methods"]) c.methods.push_back(ParseMethod(AsString(m, "methods")));
  }
  if (root["debug_trace"]) c.debug_trace = AsBool(root["debug_trace"], "debug_trace");
  if (root["threads"]) c.threads = AsInt<unsigned>(root["threads"], "threads");
  if (const auto ch = root["chain"]) {
    RequireKnown(ch, {"iterations", "burn_in"}, "chain");
    if (ch["iterations"]) c.chain.iterations = AsInt<long>(ch["iterations"], "chain.iterations");
    if (ch["burn_in"]) c.chain.burn_in = AsInt<long>(ch["burn_in"], "chain.burn_in");
  }
  if (const auto p = root["plan"]) {
    RequireKnown(p, {"epsilon", "columns", "shares", "cx", "lower", "upper", "taus", "main_taus",
                     "first_shares", "regression_shares", "step_scale"},
                 "plan");
    auto& s = c.plan;
    if (p["epsilon"]) s.epsilon = AsDouble(p["epsilon"], "plan.epsilon");
    if (p["shares"]) s.shares = AsDoubles(p["shares"], "plan.shares");
    if (p["cx"]) s.cx = AsDoubles(p["cx"], "plan.cx");
    if (p["lower"]) s.lower = AsDoubles(p["lower"], "plan.lower");
    if (p["upper"]) s.upper = AsDoubles(p["upper"], "plan.upper");
    if (p["taus"]) s.taus = AsDoubles(p["taus"], "plan.taus");
    if (p["main_taus"]) s.main_taus = AsDoubles(p["main_taus"], "plan.main_taus");
    if (p["step_scale"]) s.step_scale = AsDoubles(p["step_scale"], "plan.step_scale");
    if (p["first_shares"]) s.first_shares = ParseShares(p["first_shares"], s.first_shares, "plan.first_shares");
    if (p["regression_shares"]) {
      s.regression_shares = ParseShares(p["regression_shares"], s.regression_shares, "plan.regression_shares");
    }
  }
  if (const auto st = root["step_sizes"]) {
    if (!st.IsMap()) throw ConfigError("config: step_sizes must map variables to levels");
    for (const auto& var : st) {
      const std::string name = var.first.as<std::string>();
      if (!var.second.IsMap()) throw ConfigError("config: step_sizes." + name + " must be a mapping");
      for (const auto& lvl : var.second) {
        const std::string key = lvl.first.as<std::string>();
        double tau = 0.0;
        if (key != "default" && !ParseDouble(key, tau)) {
          throw ConfigError("config: step_sizes." + name + " keys must be 'default' or a tau");
        }
        c.step_sizes[name][key] = AsDoubles(lvl.second, "step_sizes." + name + "." + key);
      }
    }
  }
  if (const auto e = root["eval"]) {
    RequireKnown(e, {"wrt_swaps", "wrt_null", "km_k"}, "eval");
    if (e["wrt_swaps"]) c.eval.wrt_swaps = AsInt<int>(e["wrt_swaps"], "eval.wrt_swaps");
    if (e["wrt_null"]) c.eval.wrt_null = ParseWrtNull(AsString(e["wrt_null"], "eval.wrt_null"));
    if (e["km_k"]) c.eval.km_k = AsInt<std::size_t>(e["km_k"], "eval.km_k");
  }
  if (root["input"]) c.input = AsString(root["input"], "input");
  if (root["synthetic"]) c.synthetic = AsString(root["synthetic"], "synthetic");
  if (root["test"]) c.test = AsString(root["test"], "test");
  if (root["study"]) c.study = AsBool(root["study"], "study");
  if (const auto sw = root["sweep"]) {
    RequireKnown(sw, {"epsilon", "cx", "upper", "taus", "main_taus", "share_grid", "methods", "step_scale"}, "sweep");
    if (sw["epsilon"]) c.sweep.epsilon = AsDouble(sw["epsilon"], "sweep.epsilon");
    if (sw["cx"]) c.sweep.cx = AsDouble(sw["cx"], "sweep.cx");
    if (sw["upper"]) c.sweep.upper = AsDouble(sw["upper"], "sweep.upper");
    if (sw["taus"]) c.sweep.taus = AsDoubles(sw["taus"], "sweep.taus");
    if (sw["main_taus"]) c.sweep.main_taus = AsDoubles(sw["main_taus"], "sweep.main_taus");
    if (sw["step_scale"]) c.sweep.step_scale = AsDouble(sw["step_scale"], "sweep.step_scale");
    if (sw["share_grid"]) c.sweep.share_grid = AsDoubles(sw["share_grid"], "sweep.share_grid");
    if (sw["methods"]) {
      c.sweep.methods.clear();
      for (const auto& m : sw["methods"]) c.sweep.methods.push_back(ParseMethod(AsString(m, "sweep.methods")));
    }
  }
  if (const auto pn = root["panel"]) {
    RequireKnown(pn, {"input", "versions", "method", "total_epsilon", "continuer_share", "emp_lower",
                      "emp_upper", "continuer_cx", "taus", "main_taus", "shares", "step_scale", "toy"},
                 "panel");
    auto& pp = c.panel.plan;
    if (pn["input"]) c.panel_input = AsString(pn["input"], "panel.input");
    if (pn["versions"]) c.panel.synthetic_versions = AsInt<int>(pn["versions"], "panel.versions");
    if (pn["method"]) c.panel_method = ParseMethod(AsString(pn["method"], "panel.method"));
    if (pn["total_epsilon"]) pp.total_epsilon = AsDouble(pn["total_epsilon"], "panel.total_epsilon");
    if (pn["continuer_share"]) pp.continuer_share = AsDouble(pn["continuer_share"], "panel.continuer_share");
    if (pn["emp_lower"]) pp.emp_lower = AsDouble(pn["emp_lower"], "panel.emp_lower");
    if (pn["emp_upper"]) pp.emp_upper = AsDouble(pn["emp_upper"], "panel.emp_upper");
    if (pn["continuer_cx"]) pp.continuer_cx = AsDouble(pn["continuer_cx"], "panel.continuer_cx");
    if (pn["step_scale"]) pp.step_scale = AsDouble(pn["step_scale"], "panel.step_scale");
    if (pn["taus"]) pp.taus = AsDoubles(pn["taus"], "panel.taus");
    if (pn["main_taus"]) pp.main_taus = AsDoubles(pn["main_taus"], "panel.main_taus");
    if (pn["shares"]) {
      pp.shares = ParseShares(pn["shares"], pp.shares, "panel.shares");
      c.panel.shares_unspecified = false;
    }
    if (const auto t = pn["toy"]) {
      RequireKnown(t, {"years", "first_year", "initial_establishments", "birth_rate", "death_rate", "emp_cap"},
                   "panel.toy");
      auto& o = c.panel.toy;
      if (t["years"]) o.years = AsInt<int>(t["years"], "panel.toy.years");
      if (t["first_year"]) o.first_year = AsInt<int>(t["first_year"], "panel.toy.first_year");
      if (t["initial_establishments"]) {
        o.initial_establishments = AsInt<int>(t["initial_establishments"], "panel.toy.initial_establishments");
      }
      if (t["birth_rate"]) o.birth_rate = AsDouble(t["birth_rate"], "panel.toy.birth_rate");
      if (t["death_rate"]) o.death_rate = AsDouble(t["death_rate"], "panel.toy.death_rate");
      if (t["emp_cap"]) o.emp_cap = AsDouble(t["emp_cap"], "panel.toy.emp_cap");
    }
  }
  return c;
}

RunConfig LoadRunConfig(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ParseRunConfig(ss.str());
}

namespace {

void EmitDoubles(YAML::Emitter& out, const std::vector<double>& v) {
  out << YAML::Flow << YAML::BeginSeq;
  for (double x : v) out << FormatDouble(x);
  out << YAML::EndSeq;
}

void EmitShares(YAML::Emitter& out, const BudgetShares& s) {
  out << YAML::Flow << YAML::BeginMap << YAML::Key << "median" << YAML::Value << FormatDouble(s.median_share)
      << YAML::Key << "anchors" << YAML::Value << FormatDouble(s.anchor_share) << YAML::EndMap;
}

double CommandEpsilon(const RunConfig& c) {
  switch (c.command) {
    case Command::kBudgetSweep:
      return c.sweep.epsilon;
    case Command::kPanel:
      return c.panel.plan.total_epsilon;
    default:
      return c.plan.epsilon;
  }
}

}  // namespace

std::string EmitManifest(const RunConfig& c, const ManifestExtras& extras) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "command" << YAML::Value << std::string(CommandName(c.command));
  out << YAML::Key << "seed" << YAML::Value << c.seed;
  out << YAML::Key << "epsilon" << YAML::Value << FormatDouble(CommandEpsilon(c));
  out << YAML::Key << "reps" << YAML::Value << c.reps;
  out << YAML::Key << "n" << YAML::Value << c.n;
  out << YAML::Key << "out" << YAML::Value << c.out;
  out << YAML::Key << "methods" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (Method m : c.methods) out << std::string(MethodName(m));
  out << YAML::EndSeq;
  out << YAML::Key << "debug_trace" << YAML::Value << c.debug_trace;
  out << YAML::Key << "threads" << YAML::Value << c.threads;

  out << YAML::Key << "chain" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "iterations" << YAML::Value << c.chain.iterations;
  out << YAML::Key << "burn_in" << YAML::Value << c.chain.burn_in;
  out << YAML::EndMap;

  const auto& p = c.plan;
  out << YAML::Key << "plan" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "epsilon" << YAML::Value << FormatDouble(p.epsilon);
  out << YAML::Key << "shares" << YAML::Value;
  EmitDoubles(out, p.shares);
  out << YAML::Key << "cx" << YAML::Value;
  EmitDoubles(out, p.cx);
  out << YAML::Key << "lower" << YAML::Value;
  EmitDoubles(out, p.lower);
  out << YAML::Key << "upper" << YAML::Value;
  EmitDoubles(out, p.upper);
  out << YAML::Key << "taus" << YAML::Value;
  EmitDoubles(out, p.taus);
  out << YAML::Key << "main_taus" << YAML::Value;
  EmitDoubles(out, p.main_taus);
  out << YAML::Key << "step_scale" << YAML::Value;
  EmitDoubles(out, p.step_scale);
  out << YAML::Key << "first_shares" << YAML::Value;
  EmitShares(out, p.first_shares);
  out << YAML::Key << "regression_shares" << YAML::Value;
  EmitShares(out, p.regression_shares);
  out << YAML::EndMap;

  out << YAML::Key << "step_sizes" << YAML::Value << YAML::BeginMap;
  for (const auto& [var, levels] : c.step_sizes) {
    out << YAML::Key << var << YAML::Value << YAML::BeginMap;
    for (const auto& [key, steps] : levels) {
      out << YAML::Key << key << YAML::Value;
      EmitDoubles(out, steps);
    }
    out << YAML::EndMap;
  }
  out << YAML::EndMap;

  out << YAML::Key << "eval" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "wrt_swaps" << YAML::Value << c.eval.wrt_swaps;
  out << YAML::Key << "wrt_null" << YAML::Value << std::string(WrtNullName(c.eval.wrt_null));
  out << YAML::Key << "km_k" << YAML::Value << c.eval.km_k;
  out << YAML::EndMap;

  out << YAML::Key << "input" << YAML::Value << c.input;
  out << YAML::Key << "synthetic" << YAML::Value << c.synthetic;
  out << YAML::Key << "test" << YAML::Value << c.test;
  out << YAML::Key << "study" << YAML::Value << c.study;

  const auto& sw = c.sweep;
  out << YAML::Key << "sweep" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "epsilon" << YAML::Value << FormatDouble(sw.epsilon);
  out << YAML::Key << "cx" << YAML::Value << FormatDouble(sw.cx);
  out << YAML::Key << "upper" << YAML::Value << FormatDouble(sw.upper);
  out << YAML::Key << "taus" << YAML::Value;
  EmitDoubles(out, sw.taus);
  out << YAML::Key << "main_taus" << YAML::Value;
  EmitDoubles(out, sw.main_taus);
  out << YAML::Key << "step_scale" << YAML::Value << FormatDouble(sw.step_scale);
  out << YAML::Key << "share_grid" << YAML::Value;
  EmitDoubles(out, sw.share_grid);
  out << YAML::Key << "methods" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (Method m : sw.methods) out << std::string(MethodName(m));
  out << YAML::EndSeq;
  out << YAML::EndMap;

  const auto& pp = c.panel.plan;
  out << YAML::Key << "panel" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "input" << YAML::Value << c.panel_input;
  out << YAML::Key << "versions" << YAML::Value << c.panel.synthetic_versions;
  out << YAML::Key << "method" << YAML::Value << std::string(MethodName(c.panel_method));
  out << YAML::Key << "total_epsilon" << YAML::Value << FormatDouble(pp.total_epsilon);
  out << YAML::Key << "continuer_share" << YAML::Value << FormatDouble(pp.continuer_share);
  out << YAML::Key << "emp_lower" << YAML::Value << FormatDouble(pp.emp_lower);
  out << YAML::Key << "emp_upper" << YAML::Value << FormatDouble(pp.emp_upper);
  out << YAML::Key << "continuer_cx" << YAML::Value << FormatDouble(pp.continuer_cx);
  out << YAML::Key << "step_scale" << YAML::Value << FormatDouble(pp.step_scale);
  out << YAML::Key << "taus" << YAML::Value;
  EmitDoubles(out, pp.taus.empty() ? Taus20() : pp.taus);
  out << YAML::Key << "main_taus" << YAML::Value;
  EmitDoubles(out, pp.main_taus.empty() ? DefaultMainTaus() : pp.main_taus);
  if (!c.panel.shares_unspecified) {
    out << YAML::Key << "shares" << YAML::Value;
    EmitShares(out, pp.shares);
  }
  const auto& t = c.panel.toy;
  out << YAML::Key << "toy" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "years" << YAML::Value << t.years;
  out << YAML::Key << "first_year" << YAML::Value << t.first_year;
  out << YAML::Key << "initial_establishments" << YAML::Value << t.initial_establishments;
  out << YAML::Key << "birth_rate" << YAML::Value << FormatDouble(t.birth_rate);
  out << YAML::Key << "death_rate" << YAML::Value << FormatDouble(t.death_rate);
  out << YAML::Key << "emp_cap" << YAML::Value << FormatDouble(t.emp_cap);
  out << YAML::EndMap;
  out << YAML::EndMap;

  out << YAML::Key << "seeds" << YAML::Value << YAML::BeginMap;
  for (const auto& [label, s] : extras.seeds) out << YAML::Key << label << YAML::Value << s;
  out << YAML::EndMap;

  out << YAML::Key << "ledgers" << YAML::Value << YAML::BeginSeq;
  for (const auto& [label, ledger] : extras.ledgers) {
    out << YAML::BeginMap;
    out << YAML::Key << "run" << YAML::Value << label;
    out << YAML::Key << "total" << YAML::Value << FormatDouble(LedgerTotal(ledger));
    out << YAML::Key << "leaves" << YAML::Value << YAML::BeginSeq;
    for (const auto& a : ledger) {
      out << YAML::Flow << YAML::BeginSeq << a.name << FormatDouble(a.epsilon) << YAML::EndSeq;
    }
    out << YAML::EndSeq;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  out << YAML::Key << "notes" << YAML::Value << YAML::BeginSeq;
  for (const auto& note : extras.notes) out << note;
  out << YAML::EndSeq;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

void ApplyStepSizes(const RunConfig& config, SynthesisPlan& plan) {
  for (const auto& [var, levels] : config.step_sizes) {
    auto it = std::find_if(plan.variables.begin(), plan.variables.end(),
                           [&](const VariablePlan& v) { return v.name == var; });
    if (it == plan.variables.end()) throw ConfigError("config: step_sizes for unknown variable " + var);
    for (const auto& [key, steps] : levels) {
      if (key == "default") {
        it->step_sizes = steps;
      } else {
        double tau = 0.0;
        ParseDouble(key, tau);
        it->tau_step_sizes[tau] = steps;
      }
    }
  }
}

}  // namespace kngsynth
