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

#include "kngsynth/synthesizer.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <set>

#include "kngsynth/error.hpp"
#include "kngsynth/log.hpp"
#include "kngsynth/seeding.hpp"

namespace kngsynth {

void SynthesisPlan::Validate(const Dataset* data) const {
  if (!(total_epsilon > 0.0) || !std::isfinite(total_epsilon)) {
    throw ConfigError("plan: total epsilon must be positive and finite");
  }
  if (variables.empty()) throw ConfigError("plan: no variables");
  std::set<std::string> seen;
  double share_sum = 0.0;
  for (const auto& v : variables) {
    if (seen.count(v.name)) throw ConfigError("plan: variable " + v.name + " listed twice");
    for (const auto& p : v.predictors) {
      if (!seen.count(p)) {
        throw ConfigError("plan: " + v.name + " uses predictor " + p +
                          " that is not synthesized before it");
      }
    }
    seen.insert(v.name);
    if (!(v.epsilon_share > 0.0)) throw ConfigError("plan: " + v.name + " needs a positive epsilon share");
    share_sum += v.epsilon_share;
    v.bounds.Validate();
    if (v.bounds.cx_bound < 1.0) {
      throw ConfigError("plan: " + v.name + " C_X must be at least 1 (the intercept has norm 1)");
    }
    v.schedule.Validate();
    const std::size_t k = v.predictors.size() + 1;
    auto check_steps = [&](const std::vector<double>& steps) {
      if (steps.size() != k) {
        throw ConfigError("plan: " + v.name + " needs " + std::to_string(k) + " step sizes");
      }
      for (double st : steps) {
        if (!(st > 0.0) || !std::isfinite(st)) throw ConfigError("plan: " + v.name + " step sizes must be > 0");
      }
    };
    if (v.step_sizes) check_steps(*v.step_sizes);
    for (const auto& [tau, steps] : v.tau_step_sizes) {
      if (!v.schedule.grid.find(tau)) {
        throw ConfigError("plan: " + v.name + " has step sizes for tau " + FormatDouble(tau) +
                          " outside its grid");
      }
      check_steps(steps);
    }
  }
  if (std::abs(share_sum - 1.0) > kWeightSumTol) {
    throw ConfigError("plan: epsilon shares sum to " + FormatDouble(share_sum) + ", expected 1");
  }
  if (data) {
    std::set<std::string> cols(data->names().begin(), data->names().end());
    if (cols != seen) throw ConfigError("plan: variables must match the dataset's columns exactly");
  }
}

std::vector<double> SynthesizeColumn(const std::vector<QuantileFit>& fits, const Matrix& design,
                                     const ColumnBounds& bounds, std::uint64_t seed) {
  if (fits.empty()) throw ConfigError("synthesize column: no quantile fits");
  for (const auto& f : fits) {
    if (f.beta.size() != design.cols()) {
      throw DataError("synthesize column: fit has " + std::to_string(f.beta.size()) +
                      " coefficients, design has " + std::to_string(design.cols()) + " columns");
    }
  }
  if (!DetectCrossing(fits, design).empty()) {
    log::Warning("synthesize column: quantile fits cross on the synthetic design");
  }
  Rng rng = MakeRng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, fits.size() - 1);
  std::vector<double> out(static_cast<std::size_t>(design.rows()));
  for (Eigen::Index j = 0; j < design.rows(); ++j) {
    const auto& beta = fits[pick(rng)].beta;
    const double v = design.row(j).dot(beta);
    out[static_cast<std::size_t>(j)] = std::max(std::min(v, bounds.outcome_upper), bounds.outcome_lower);
  }
  return out;
}

SynthesisResult SynthesizeDataset(const Dataset& original, const SynthesisPlan& plan,
                                  const MhConfig& mh_template, std::uint64_t seed,
                                  const SynthesisOptions& options) {
  plan.Validate(&original);
  BudgetTree budget("dataset", plan.total_epsilon);
  Weights shares;
  for (const auto& v : plan.variables) shares.emplace_back(v.name, v.epsilon_share);
  budget.Split(shares);

  SynthesisResult result;
  std::vector<std::string> syn_names;
  std::vector<std::vector<double>> syn_cols;
  for (const auto& v : plan.variables) {
    const std::vector<double> y_w = Winsorize(original.column(v.name), v.bounds);
    auto y = std::make_shared<Vector>(Eigen::Map<const Vector>(y_w.data(), static_cast<Eigen::Index>(y_w.size())));
    // The norm bound only backs the sensitivity; non-private fits see the raw design.
    Matrix design = BuildDesignMatrix(original, v.predictors);
    if (!plan.nonprivate) design = ClipRowNorms(design, v.bounds.cx_bound);
    auto x = std::make_shared<Matrix>(std::move(design));

    VariableRun run;
    run.name = v.name;
    if (plan.nonprivate) {
      run.fits = NonprivateFits(*x, *y, v.schedule.grid);
    } else {
      MhConfig mh = mh_template;
      if (v.step_sizes) {
        mh.step_sizes = *v.step_sizes;
      } else {
        mh.step_sizes = HeuristicStepSizes(y_w, x->cols());
        for (double& s : mh.step_sizes) s *= v.step_scale;
      }
      mh.soft_lower = v.bounds.outcome_lower;
      mh.soft_upper = v.bounds.outcome_upper;
      mh.seed = DeriveSeed(seed, "mh/" + v.name);
      ScheduleInput in;
      in.x = x;
      in.y = y;
      in.epsilon = budget.child(v.name).epsilon();
      in.cx_bound = v.bounds.cx_bound;
      in.name = v.name;
      in.collect_traces = options.collect_traces;
      in.step_overrides = v.tau_step_sizes;
      ScheduleResult sr = RunSchedule(in, v.schedule, mh);
      run.fits = std::move(sr.fits);
      run.stats = std::move(sr.stats);
      run.traces = std::move(sr.traces);
      run.step_sizes = mh.step_sizes;
      result.ledger.insert(result.ledger.end(), sr.ledger.begin(), sr.ledger.end());
    }
    run.crossings = DetectCrossing(run.fits, *x).size();

    // Predict from synthetic predecessors only.
    Matrix z;
    if (v.predictors.empty()) {
      z = Matrix::Ones(static_cast<Eigen::Index>(original.rows()), 1);
    } else {
      z = BuildDesignMatrix(Dataset(syn_names, syn_cols), v.predictors);
    }
    syn_cols.push_back(SynthesizeColumn(run.fits, z, v.bounds, DeriveSeed(seed, "draw/" + v.name)));
    syn_names.push_back(v.name);
    result.runs.push_back(std::move(run));
  }

  std::vector<std::string> names;
  std::vector<std::vector<double>> cols;
  for (const auto& name : original.names()) {
    const auto it = std::find(syn_names.begin(), syn_names.end(), name);
    names.push_back(name);
    cols.push_back(std::move(syn_cols[static_cast<std::size_t>(it - syn_names.begin())]));
  }
  result.synthetic = Dataset(std::move(names), std::move(cols));
  if (!plan.nonprivate && !BudgetClose(LedgerTotal(result.ledger), plan.total_epsilon)) {
    throw NumericError("synthesis: ledger does not sum to the configured epsilon");
  }
  return result;
}

}  // namespace kngsynth
