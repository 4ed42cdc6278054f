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

#include "kngsynth/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "kngsynth/error.hpp"
#include "kngsynth/seeding.hpp"

namespace kngsynth {

std::string_view MethodName(Method m) {
  switch (m) {
    case Method::kNonprivate:
      return "nonprivate";
    case Method::kIndependent:
      return "kng";
    case Method::kStepwiseFixed:
      return "stepwise-fixed";
    case Method::kStepwiseVarying:
      return "stepwise-varying";
    case Method::kSandwichFixed:
      return "sandwich-fixed";
    case Method::kSandwichVarying:
      return "sandwich-varying";
  }
  return "unknown";
}

Method ParseMethod(std::string_view name) {
  for (Method m : AllMethods()) {
    if (MethodName(m) == name) return m;
  }
  if (name == "independent") return Method::kIndependent;
  if (name == "non-private") return Method::kNonprivate;
  throw ConfigError("unknown method '" + std::string(name) +
                    "' (expected nonprivate, kng, stepwise-fixed, stepwise-varying, "
                    "sandwich-fixed or sandwich-varying)");
}

std::vector<Method> AllMethods() {
  return {Method::kNonprivate,      Method::kStepwiseFixed,  Method::kStepwiseVarying,
          Method::kSandwichFixed,   Method::kSandwichVarying, Method::kIndependent};
}

ConstraintMode ModeOf(Method m) {
  switch (m) {
    case Method::kIndependent:
      return {Scheme::kIndependent, SlopeRule::kVarying};
    case Method::kStepwiseFixed:
      return {Scheme::kStepwise, SlopeRule::kFixed};
    case Method::kStepwiseVarying:
      return {Scheme::kStepwise, SlopeRule::kVarying};
    case Method::kSandwichFixed:
      return {Scheme::kSandwich, SlopeRule::kFixed};
    case Method::kSandwichVarying:
      return {Scheme::kSandwich, SlopeRule::kVarying};
    case Method::kNonprivate:
      break;
  }
  throw ConfigError("non-private method has no constraint mode");
}

bool IsPrivate(Method m) { return m != Method::kNonprivate; }

std::string TauLabel(double tau) { return "tau=" + FormatDouble(tau); }

void QuantileSchedule::Validate() const {
  const auto& s = shares;
  if (!(s.median_share > 0.0 && s.median_share <= 1.0)) {
    throw ConfigError("schedule: median_share must lie in (0, 1]");
  }
  if (!(s.anchor_share > 0.0 && s.anchor_share <= 1.0)) {
    throw ConfigError("schedule: anchor_share must lie in (0, 1]");
  }
  if (mode.scheme == Scheme::kStepwise && grid.size() > 1 && s.median_share >= 1.0) {
    throw ConfigError("schedule: median_share of 1 leaves other levels unfunded");
  }
  if (mode.scheme == Scheme::kSandwich) {
    const bool has_between = grid.main_taus().size() < grid.size();
    if (has_between && s.anchor_share >= 1.0) {
      throw ConfigError("schedule: anchor_share of 1 leaves in-between levels unfunded");
    }
    if (grid.main_taus().size() > 1 && s.median_share >= 1.0) {
      throw ConfigError("schedule: median_share of 1 leaves other anchors unfunded");
    }
  }
}

namespace {

Weights MedianWeighted(const std::vector<double>& taus, double median_share) {
  Weights w;
  if (taus.size() == 1) {
    w.emplace_back(TauLabel(taus.front()), 1.0);
    return w;
  }
  const double other = (1.0 - median_share) / static_cast<double>(taus.size() - 1);
  for (double t : taus) w.emplace_back(TauLabel(t), t == 0.5 ? median_share : other);
  return w;
}

Weights Even(const std::vector<double>& taus) {
  Weights w;
  for (double t : taus) w.emplace_back(TauLabel(t), 1.0 / static_cast<double>(taus.size()));
  return w;
}

std::vector<double> BetweenTaus(const QuantileGrid& grid) {
  std::vector<double> out;
  for (double t : grid.taus()) {
    if (!grid.is_main(t)) out.push_back(t);
  }
  return out;
}

}  // namespace

BudgetTree QuantileSchedule::Allocate(std::string name, double variable_epsilon) const {
  Validate();
  BudgetTree root(std::move(name), variable_epsilon);
  switch (mode.scheme) {
    case Scheme::kIndependent:
      root.Split(Even(grid.taus()));
      break;
    case Scheme::kStepwise:
      root.Split(MedianWeighted(grid.taus(), shares.median_share));
      break;
    case Scheme::kSandwich: {
      const auto between = BetweenTaus(grid);
      if (between.empty()) {
        root.Split(MedianWeighted(grid.main_taus(), shares.median_share));
        break;
      }
      root.Split({{"anchors", shares.anchor_share}, {"between", 1.0 - shares.anchor_share}});
      root.child("anchors").Split(MedianWeighted(grid.main_taus(), shares.median_share));
      root.child("between").Split(Even(between));
      break;
    }
  }
  root.CheckConservation();
  return root;
}

std::vector<double> QuantileSchedule::EpsilonPerTau(double variable_epsilon) const {
  const auto leaves = Allocate("v", variable_epsilon).Leaves();
  std::vector<double> out;
  out.reserve(grid.size());
  for (double t : grid.taus()) {
    const std::string label = "/" + TauLabel(t);
    auto it = std::find_if(leaves.begin(), leaves.end(), [&](const Allocation& a) {
      return a.name.size() >= label.size() &&
             a.name.compare(a.name.size() - label.size(), label.size(), label) == 0;
    });
    if (it == leaves.end()) throw ConfigError("schedule: no budget for " + TauLabel(t));
    out.push_back(it->epsilon);
  }
  return out;
}

bool ConstraintFixedSlope(const QuantileFit& candidate, Neighbors neighbors) {
  const double b = candidate.beta[0];
  if (neighbors.lower && !(neighbors.lower->beta[0] < b)) return false;
  if (neighbors.upper && !(b < neighbors.upper->beta[0])) return false;
  return true;
}

bool ConstraintDataCheck(const QuantileFit& candidate, Neighbors neighbors, const Matrix& x) {
  auto check_dims = [&](const QuantileFit& f) {
    if (f.beta.size() != x.cols()) {
      throw DataError("data check: coefficient length " + std::to_string(f.beta.size()) +
                      " does not match " + std::to_string(x.cols()) + " design columns");
    }
  };
  check_dims(candidate);
  const Vector fitted = x * candidate.beta;
  if (neighbors.lower) {
    check_dims(*neighbors.lower);
    const Vector lo = x * neighbors.lower->beta;
    if (!(lo.array() < fitted.array()).all()) return false;
  }
  if (neighbors.upper) {
    check_dims(*neighbors.upper);
    const Vector up = x * neighbors.upper->beta;
    if (!(fitted.array() < up.array()).all()) return false;
  }
  return true;
}

std::vector<double> HeuristicStepSizes(std::span<const double> y, Eigen::Index k) {
  double spread = Iqr(y);
  if (!(spread > 0.0)) spread = Scale(y);
  const double n = static_cast<double>(std::max<std::size_t>(y.size(), 1));
  const double intercept = 0.5 * spread / std::sqrt(n);
  std::vector<double> steps(static_cast<std::size_t>(k), 0.1 * intercept);
  if (k > 0) steps[0] = intercept;
  return steps;
}

std::vector<QuantileFit> NonprivateFits(const Matrix& x, const Vector& y,
                                        const QuantileGrid& grid) {
  std::vector<QuantileFit> fits;
  fits.reserve(grid.size());
  for (double t : grid.taus()) fits.push_back(FitNonprivate(x, y, t));
  return fits;
}

namespace {

constexpr double kInitNudge = 1e-6;

struct LevelRun {
  QuantileFit fit;
  ChainStats stats;
  std::vector<Vector> trace;
};

// Moves beta so every fitted value sits inside the soft bounds: a pure
// intercept shift when one fits, else the smallest convex step towards a
// constant fit at the clamped median prediction.
Vector NudgeIntoSoftBounds(const Matrix& x, Vector beta, const MhConfig& mh) {
  const Vector fitted = x * beta;
  const double lo = fitted.minCoeff();
  const double hi = fitted.maxCoeff();
  if (hi - lo > mh.soft_upper - mh.soft_lower) {
    std::vector<double> f(fitted.data(), fitted.data() + fitted.size());
    std::nth_element(f.begin(), f.begin() + static_cast<std::ptrdiff_t>(f.size() / 2), f.end());
    const double c = std::clamp(f[f.size() / 2], mh.soft_lower, mh.soft_upper);
    double w = 0.0;
    for (double v : fitted) {
      if (v > mh.soft_upper) w = std::max(w, (v - mh.soft_upper) / (v - c));
      if (v < mh.soft_lower) w = std::max(w, (mh.soft_lower - v) / (c - v));
    }
    w = std::min(1.0, w * (1.0 + 1e-9) + 1e-12);
    Vector target = Vector::Zero(beta.size());
    target[0] = c;
    return (1.0 - w) * beta + w * target;
  }
  if (lo < mh.soft_lower) beta[0] += (mh.soft_lower - lo) * (1.0 + 1e-9) + 1e-9;
  if (hi > mh.soft_upper) beta[0] -= (hi - mh.soft_upper) * (1.0 + 1e-9) + 1e-9;
  return beta;
}

// Shifts the intercept of `init` into the range where every fitted value is
// strictly between the neighbour fits and inside the soft bounds. Leaves
// `init` alone when it is already feasible or no such shift exists.
Vector FeasibleStart(const Matrix& x, Vector init, const Vector* lo_fit, const Vector* up_fit,
                     const MhConfig& mh) {
  const Vector fitted = x * init;
  const Vector offset = fitted.array() - init[0];
  double lo = mh.soft_lower - offset.minCoeff();
  double hi = mh.soft_upper - offset.maxCoeff();
  bool strict_lo = false;
  bool strict_hi = false;
  if (lo_fit) {
    const double m = (*lo_fit - offset).maxCoeff();
    if (m >= lo) {
      lo = m;
      strict_lo = true;
    }
  }
  if (up_fit) {
    const double m = (*up_fit - offset).minCoeff();
    if (m <= hi) {
      hi = m;
      strict_hi = true;
    }
  }
  const double b = init[0];
  const bool inside = (strict_lo ? b > lo : b >= lo) && (strict_hi ? b < hi : b <= hi);
  if (inside || !(lo < hi)) return init;
  if (std::isfinite(lo) && std::isfinite(hi)) {
    init[0] = lo + 0.5 * (hi - lo);
  } else if (std::isfinite(lo)) {
    init[0] = lo + std::max(kInitNudge, std::abs(lo) * 1e-12);
  } else {
    init[0] = hi - std::max(kInitNudge, std::abs(hi) * 1e-12);
  }
  return init;
}

bool StartFeasible(const Matrix& x, const Vector& init, const Vector* lo_fit, const Vector* up_fit,
                   const MhConfig& mh) {
  const Vector f = x * init;
  if (f.minCoeff() < mh.soft_lower || f.maxCoeff() > mh.soft_upper) return false;
  if (lo_fit && !(f.array() > lo_fit->array()).all()) return false;
  if (up_fit && !(f.array() < up_fit->array()).all()) return false;
  return true;
}

// One-sided start for a varying-slope level: a convex step from the
// neighbour towards the constant fit at the soft bound on the open side.
// Fitted values then move strictly away from the neighbour and stay inside
// the bounds whenever the neighbour's do.
Vector TowardBound(const Vector& prev, double bound, double weight) {
  Vector target = Vector::Zero(prev.size());
  target[0] = bound;
  return (1.0 - weight) * prev + weight * target;
}

class LevelSampler {
 public:
  LevelSampler(const ScheduleInput& input, const MhConfig& mh) : in_(input), mh_(mh) {
    if (!in_.x || !in_.y) throw ConfigError("schedule: missing data");
    if (in_.x->cols() == 0 || !(in_.x->col(0).array() == 1.0).all()) {
      throw ConfigError("schedule: design must start with an intercept column");
    }
  }

  Eigen::Index k() const { return in_.x->cols(); }
  const Matrix& x() const { return *in_.x; }
  const MhConfig& mh() const { return mh_; }

  Vector NonprivateStart(double tau) const {
    return NudgeIntoSoftBounds(*in_.x, FitNonprivate(*in_.x, *in_.y, tau).beta, mh_);
  }

  LevelRun Joint(double tau, double eps, const Vector& init,
                 const ThetaConstraint& constraint = {}) const {
    KngTarget target(in_.x, in_.y, tau, eps, in_.cx_bound, in_.base_c);
    MhConfig cfg = ForTau(tau);
    LevelRun run;
    ChainOutput out;
    if (in_.collect_traces) out.trace = &run.trace;
    run.fit = {tau, SampleAmh(target, cfg, init, constraint, &out)};
    run.stats = out.stats;
    return run;
  }

  LevelRun Intercept(double tau, double eps, const Vector& init,
                     const InterceptInterval& interval) const {
    KngTarget target(in_.x, in_.y, tau, eps, in_.cx_bound, in_.base_c);
    MhConfig cfg = ForTau(tau);
    LevelRun run;
    ChainOutput out;
    if (in_.collect_traces) out.trace = &run.trace;
    run.fit = {tau, SampleInterceptAmh(target, cfg, init, interval, &out)};
    run.stats = out.stats;
    return run;
  }

 private:
  MhConfig ForTau(double tau) const {
    MhConfig cfg = mh_;
    cfg.seed = DeriveSeed(mh_.seed, in_.name, tau);
    for (const auto& [t, steps] : in_.step_overrides) {
      if (std::abs(t - tau) <= 1e-12) cfg.step_sizes = steps;
    }
    return cfg;
  }

  const ScheduleInput& in_;
  const MhConfig& mh_;
};

// Stepwise pass over `taus` (which must contain the median). Results land in
// `done` keyed by tau.
void RunStepwiseLevels(const LevelSampler& sampler, const std::vector<double>& taus,
                       const std::map<double, double>& eps, SlopeRule rule,
                       std::map<double, LevelRun>& done) {
  const bool intercept_moves = rule == SlopeRule::kFixed || sampler.k() == 1;
  done[0.5] = sampler.Joint(0.5, eps.at(0.5), sampler.NonprivateStart(0.5));

  std::vector<double> lower;
  std::vector<double> upper;
  for (double t : taus) {
    if (t < 0.5) lower.push_back(t);
    if (t > 0.5) upper.push_back(t);
  }
  std::sort(lower.rbegin(), lower.rend());
  std::sort(upper.begin(), upper.end());

  for (const auto* pass : {&lower, &upper}) {
    const bool downward = pass == &lower;
    const QuantileFit* prev = &done.at(0.5).fit;
    for (double t : *pass) {
      Vector init = prev->beta;
      init[0] += downward ? -kInitNudge : kInitNudge;
      LevelRun run;
      if (intercept_moves) {
        InterceptInterval iv;
        (downward ? iv.upper : iv.lower) = prev->beta[0];
        run = sampler.Intercept(t, eps.at(t), init, iv);
      } else {
        const Vector bound = sampler.x() * prev->beta;
        const Vector* lo_fit = downward ? nullptr : &bound;
        const Vector* up_fit = downward ? &bound : nullptr;
        init = FeasibleStart(sampler.x(), init, lo_fit, up_fit, sampler.mh());
        const double edge = downward ? sampler.mh().soft_lower : sampler.mh().soft_upper;
        if (std::isfinite(edge)) {
          for (double w : {1e-3, 0.5}) {
            if (StartFeasible(sampler.x(), init, lo_fit, up_fit, sampler.mh())) break;
            init = TowardBound(prev->beta, edge, w);
          }
        }
        ThetaConstraint c = [bound, downward](const Vector&, const Vector& fitted) {
          return downward ? (fitted.array() < bound.array()).all()
                          : (fitted.array() > bound.array()).all();
        };
        run = sampler.Joint(t, eps.at(t), init, c);
      }
      done[t] = std::move(run);
      prev = &done.at(t).fit;
    }
  }
}

ScheduleResult Assemble(const ScheduleInput& input, const QuantileSchedule& schedule,
                        double variable_epsilon, std::map<double, LevelRun>& done,
                        bool assert_noncrossing) {
  ScheduleResult res;
  for (double t : schedule.grid.taus()) {
    auto& run = done.at(t);
    res.fits.push_back(run.fit);
    res.stats.push_back(run.stats);
    if (input.collect_traces) res.traces.push_back(std::move(run.trace));
  }
  res.ledger = schedule.Allocate(input.name, variable_epsilon).Leaves();
  if (assert_noncrossing && !DetectCrossing(res.fits, *input.x).empty()) {
    throw NumericError("schedule " + input.name + ": constrained output crosses");
  }
  return res;
}

std::map<double, double> EpsMap(const QuantileSchedule& s, double variable_epsilon) {
  const auto per = s.EpsilonPerTau(variable_epsilon);
  std::map<double, double> m;
  for (std::size_t i = 0; i < per.size(); ++i) m[s.grid.taus()[i]] = per[i];
  return m;
}

}  // namespace

ScheduleResult StepwiseKng(const ScheduleInput& input, const QuantileSchedule& schedule,
                           const MhConfig& mh) {
  schedule.Validate();
  LevelSampler sampler(input, mh);
  const auto eps = EpsMap(schedule, input.epsilon);
  std::map<double, LevelRun> done;
  RunStepwiseLevels(sampler, schedule.grid.taus(), eps, schedule.mode.slope_rule, done);
  return Assemble(input, schedule, input.epsilon, done, true);
}

ScheduleResult SandwichKng(const ScheduleInput& input, const QuantileSchedule& schedule,
                           const MhConfig& mh) {
  schedule.Validate();
  LevelSampler sampler(input, mh);
  const auto eps = EpsMap(schedule, input.epsilon);
  const SlopeRule rule = schedule.mode.slope_rule;
  std::map<double, LevelRun> done;
  RunStepwiseLevels(sampler, schedule.grid.main_taus(), eps, rule, done);

  const bool intercept_moves = rule == SlopeRule::kFixed || sampler.k() == 1;
  const Vector median_beta = done.at(0.5).fit.beta;
  for (double t : BetweenTaus(schedule.grid)) {
    auto above = done.upper_bound(t);
    const QuantileFit* up = above == done.end() ? nullptr : &above->second.fit;
    const QuantileFit* lo = above == done.begin() ? nullptr : &std::prev(above)->second.fit;
    Vector init;
    if (lo && up) {
      init = 0.5 * (lo->beta + up->beta);
    } else if (up) {
      init = up->beta;
      init[0] -= kInitNudge;
    } else {
      init = lo->beta;
      init[0] += kInitNudge;
    }
    LevelRun run;
    if (intercept_moves) {
      if (sampler.k() > 1) init.tail(sampler.k() - 1) = median_beta.tail(sampler.k() - 1);
      InterceptInterval iv;
      if (lo) iv.lower = lo->beta[0];
      if (up) iv.upper = up->beta[0];
      run = sampler.Intercept(t, eps.at(t), init, iv);
    } else {
      Vector lo_fit;
      Vector up_fit;
      if (lo) lo_fit = sampler.x() * lo->beta;
      if (up) up_fit = sampler.x() * up->beta;
      init = FeasibleStart(sampler.x(), init, lo ? &lo_fit : nullptr, up ? &up_fit : nullptr,
                           sampler.mh());
      ThetaConstraint c = [lo_fit, up_fit](const Vector&, const Vector& fitted) {
        if (lo_fit.size() && !(lo_fit.array() < fitted.array()).all()) return false;
        if (up_fit.size() && !(fitted.array() < up_fit.array()).all()) return false;
        return true;
      };
      run = sampler.Joint(t, eps.at(t), init, c);
    }
    done[t] = std::move(run);
  }
  return Assemble(input, schedule, input.epsilon, done, true);
}

ScheduleResult IndependentKng(const ScheduleInput& input, const QuantileSchedule& schedule,
                              const MhConfig& mh) {
  schedule.Validate();
  LevelSampler sampler(input, mh);
  const auto eps = EpsMap(schedule, input.epsilon);
  // Every chain starts where the other schemes start: the non-private
  // median fit. No per-level non-private estimate is touched.
  const Vector start = sampler.NonprivateStart(0.5);
  std::map<double, LevelRun> done;
  for (double t : schedule.grid.taus()) done[t] = sampler.Joint(t, eps.at(t), start);
  return Assemble(input, schedule, input.epsilon, done, false);
}

ScheduleResult RunSchedule(const ScheduleInput& input, const QuantileSchedule& schedule,
                           const MhConfig& mh) {
  switch (schedule.mode.scheme) {
    case Scheme::kStepwise:
      return StepwiseKng(input, schedule, mh);
    case Scheme::kSandwich:
      return SandwichKng(input, schedule, mh);
    case Scheme::kIndependent:
      return IndependentKng(input, schedule, mh);
  }
  throw ConfigError("unknown scheme");
}

}  // namespace kngsynth
