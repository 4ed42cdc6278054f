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

#include "kngsynth/kng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <string>

#include "kngsynth/error.hpp"
#include "kngsynth/seeding.hpp"

namespace kngsynth {

double Sensitivity(double tau, double cx_bound) { return 2.0 * (1.0 - tau) * cx_bound; }

KngTarget::KngTarget(std::shared_ptr<const Matrix> x, std::shared_ptr<const Vector> y,
                     double tau, double epsilon, double cx_bound, double base_c)
    : x_(std::move(x)),
      y_(std::move(y)),
      tau_(tau),
      epsilon_(epsilon),
      cx_bound_(cx_bound),
      base_c_(base_c) {
  Validate();
  column_sums_ = x_->colwise().sum().transpose();
  has_intercept_ = x_->cols() > 0 && (x_->col(0).array() == 1.0).all();
}

KngTarget::KngTarget(const Matrix& x, const Vector& y, double tau, double epsilon,
                     double cx_bound, double base_c)
    : KngTarget(std::make_shared<const Matrix>(x), std::make_shared<const Vector>(y), tau,
                epsilon, cx_bound, base_c) {}

void KngTarget::Validate() const {
  if (!x_ || !y_) throw ConfigError("kng target: null data");
  if (x_->rows() == 0 || x_->cols() == 0) throw DataError("kng target: empty design");
  if (x_->rows() != y_->size()) throw DataError("kng target: X and y row counts differ");
  if (!(tau_ > 0.0 && tau_ < 1.0)) throw ConfigError("kng target: tau must lie in (0,1)");
  if (!(epsilon_ > 0.0) || !std::isfinite(epsilon_)) {
    throw ConfigError("kng target: epsilon must be positive");
  }
  if (!(cx_bound_ > 0.0) || !std::isfinite(cx_bound_)) {
    throw ConfigError("kng target: cx_bound must be positive");
  }
  if (!(base_c_ > 0.0)) throw ConfigError("kng target: base measure constant must be positive");
  const double limit = cx_bound_ * (1.0 + 1e-12);
  for (Eigen::Index i = 0; i < x_->rows(); ++i) {
    const double norm = x_->row(i).norm();
    if (norm > limit) {
      throw ConfigError("kng target: row " + std::to_string(i) + " has norm " +
                        std::to_string(norm) + " > C_X = " + std::to_string(cx_bound_) +
                        " (bounds mis-set)");
    }
  }
}

double KngTarget::scale() const {
  return epsilon_ * static_cast<double>(n()) / (4.0 * (1.0 - tau_) * cx_bound_);
}

namespace {

// Shared final step so every code path rounds identically.
inline double Combine(const KngTarget& t, const Vector& grad_sum, double theta_sq) {
  return -t.scale() * (grad_sum.norm() / static_cast<double>(t.n())) - t.base_c() * theta_sq;
}

}  // namespace

double LogDensityFromFitted(const Vector& theta, const Vector& fitted, const KngTarget& target) {
  const Vector mask = (target.y().array() <= fitted.array()).cast<double>();
  const Vector selected = target.x().transpose() * mask;
  const Vector grad = -target.tau() * target.column_sums() + selected;
  return Combine(target, grad, theta.squaredNorm());
}

double LogDensity(const Vector& theta, const KngTarget& target) {
  if (theta.size() != target.k()) throw DataError("log density: theta has wrong length");
  const Vector fitted = target.x() * theta;
  return LogDensityFromFitted(theta, fitted, target);
}

void MhConfig::Validate(Eigen::Index k) const {
  if (static_cast<Eigen::Index>(step_sizes.size()) != k) {
    throw ConfigError("mh config: need " + std::to_string(k) + " step sizes, got " +
                      std::to_string(step_sizes.size()));
  }
  for (double s : step_sizes) {
    if (!(s > 0.0) || !std::isfinite(s)) throw ConfigError("mh config: step sizes must be > 0");
  }
  if (iterations <= 0) throw ConfigError("mh config: iterations must be positive");
  if (burn_in < 0 || burn_in >= iterations) {
    throw ConfigError("mh config: burn-in must lie in [0, iterations)");
  }
  if (!(soft_lower < soft_upper)) throw ConfigError("mh config: soft_lower must be < soft_upper");
  if (max_constraint_retries <= 0) throw ConfigError("mh config: retries must be positive");
}

namespace {

// Fitted-value-free evaluator for theta = (b, frozen slopes).
class InterceptModel {
 public:
  InterceptModel(const KngTarget& target, const Vector& theta)
      : target_(target), frozen_(theta) {
    const Matrix& x = target.x();
    const Vector& y = target.y();
    const Eigen::Index n = x.rows();
    const Eigen::Index k = x.cols();
    Vector offset = Vector::Zero(n);
    if (k > 1) offset = x.rightCols(k - 1) * theta.tail(k - 1);
    slope_sq_ = k > 1 ? theta.tail(k - 1).squaredNorm() : 0.0;
    offset_min_ = offset.minCoeff();
    offset_max_ = offset.maxCoeff();

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Vector r = y - offset;
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return r[a] < r[b]; });
    thresholds_.resize(static_cast<std::size_t>(n));
    prefix_ = Matrix::Zero(k, n + 1);
    for (Eigen::Index m = 0; m < n; ++m) {
      const Eigen::Index i = order[static_cast<std::size_t>(m)];
      thresholds_[static_cast<std::size_t>(m)] = r[i];
      prefix_.col(m + 1) = prefix_.col(m) + x.row(i).transpose();
    }
    base_ = -target.tau() * target.column_sums();
  }

  double LogDensity(double b) const {
    // Rows with y_i - offset_i <= b, i.e. y_i <= x_i' theta.
    const auto count = std::upper_bound(thresholds_.begin(), thresholds_.end(), b) -
                       thresholds_.begin();
    const Vector grad = base_ + prefix_.col(count);
    return Combine(target_, grad, b * b + slope_sq_);
  }

  double LowestIntercept(const MhConfig& c) const { return c.soft_lower - offset_min_; }
  double HighestIntercept(const MhConfig& c) const { return c.soft_upper - offset_max_; }

  bool WithinSoftBounds(double b, const MhConfig& c) const {
    return b + offset_min_ >= c.soft_lower && b + offset_max_ <= c.soft_upper;
  }

 private:
  const KngTarget& target_;
  Vector frozen_;
  std::vector<double> thresholds_;
  Matrix prefix_;
  Vector base_;
  double slope_sq_ = 0.0;
  double offset_min_ = 0.0;
  double offset_max_ = 0.0;
};

bool WithinSoftBounds(const Vector& fitted, const MhConfig& c) {
  if (std::isfinite(c.soft_lower) && fitted.minCoeff() < c.soft_lower) return false;
  if (std::isfinite(c.soft_upper) && fitted.maxCoeff() > c.soft_upper) return false;
  return true;
}

[[noreturn]] void ThrowInfeasible() {
  throw NumericError("constraint infeasible from init");
}

Vector RunIntercept(const KngTarget& target, const MhConfig& config, const Vector& init,
                    const InterceptInterval& interval, ChainOutput* output) {
  InterceptModel model(target, init);
  Rng rng = MakeRng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  ChainStats local;
  ChainStats& stats = output ? output->stats : local;
  const double step = config.step_sizes[0];

  auto feasible = [&](double b) { return model.WithinSoftBounds(b, config) && interval.contains(b); };

  double b = init[0];
  if (!feasible(b)) {
    // Midpoint of the exact feasible range for the intercept.
    ++stats.restarts;
    const double lo = std::max(interval.lower, model.LowestIntercept(config));
    const double hi = std::min(interval.upper, model.HighestIntercept(config));
    const double mid = std::isfinite(lo) && std::isfinite(hi) ? lo + 0.5 * (hi - lo)
                       : std::isfinite(lo)                   ? lo + step
                                                             : hi - step;
    if (!(lo <= hi) || !feasible(mid)) ThrowInfeasible();
    b = mid;
  }

  double logp = model.LogDensity(b);
  for (long it = 0; it < config.iterations; ++it) {
    const double prop = b + step * normal(rng);
    ++stats.proposed;
    if (!model.WithinSoftBounds(prop, config)) {
      ++stats.rejected_bounds;
    } else if (!interval.contains(prop)) {
      ++stats.rejected_constraint;
    } else {
      const double lp = model.LogDensity(prop);
      const double delta = lp - logp;
      if (delta >= 0.0 || std::log(unif(rng)) < delta) {
        b = prop;
        logp = lp;
        ++stats.accepted;
      }
    }
    if (output && output->trace && it >= config.burn_in &&
        (it - config.burn_in) % std::max(1L, output->thin) == 0) {
      Vector s = init;
      s[0] = b;
      output->trace->push_back(std::move(s));
    }
  }
  Vector out = init;
  out[0] = b;
  return out;
}

}  // namespace

Vector SampleAmh(const KngTarget& target, const MhConfig& config, const Vector& init,
                 const ThetaConstraint& constraint, ChainOutput* output) {
  const Eigen::Index k = target.k();
  config.Validate(k);
  if (init.size() != k) throw DataError("sampler: init has wrong length");

  if (config.allow_fast_path && k == 1 && target.has_intercept() && !constraint) {
    return RunIntercept(target, config, init, InterceptInterval{}, output);
  }

  const Matrix& x = target.x();
  Rng rng = MakeRng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  ChainStats local;
  ChainStats& stats = output ? output->stats : local;
  Eigen::Map<const Vector> steps(config.step_sizes.data(), k);

  auto feasible = [&](const Vector& th, const Vector& fit) {
    return WithinSoftBounds(fit, config) && (!constraint || constraint(th, fit));
  };

  Vector state = init;
  Vector fitted = x * state;
  if (!feasible(state, fitted)) {
    bool found = false;
    for (int attempt = 1; attempt <= config.max_constraint_retries && !found; ++attempt) {
      ++stats.restarts;
      Vector cand(k);
      for (Eigen::Index j = 0; j < k; ++j) {
        cand[j] = init[j] + steps[j] * static_cast<double>(attempt) * normal(rng);
      }
      Vector cfit = x * cand;
      if (feasible(cand, cfit)) {
        state = std::move(cand);
        fitted = std::move(cfit);
        found = true;
      }
    }
    if (!found) ThrowInfeasible();
  }

  double logp = LogDensityFromFitted(state, fitted, target);
  Vector prop(k);
  Vector pfit(x.rows());
  for (long it = 0; it < config.iterations; ++it) {
    for (Eigen::Index j = 0; j < k; ++j) prop[j] = state[j] + steps[j] * normal(rng);
    pfit.noalias() = x * prop;
    ++stats.proposed;
    if (!WithinSoftBounds(pfit, config)) {
      ++stats.rejected_bounds;
    } else if (constraint && !constraint(prop, pfit)) {
      ++stats.rejected_constraint;
    } else {
      const double lp = LogDensityFromFitted(prop, pfit, target);
      const double delta = lp - logp;
      if (delta >= 0.0 || std::log(unif(rng)) < delta) {
        state.swap(prop);
        fitted.swap(pfit);
        logp = lp;
        ++stats.accepted;
      }
    }
    if (output && output->trace && it >= config.burn_in &&
        (it - config.burn_in) % std::max(1L, output->thin) == 0) {
      output->trace->push_back(state);
    }
  }
  return state;
}

Vector SampleInterceptAmh(const KngTarget& target, const MhConfig& config, const Vector& init,
                          const InterceptInterval& interval, ChainOutput* output) {
  config.Validate(target.k());
  if (init.size() != target.k()) throw DataError("sampler: init has wrong length");
  if (!target.has_intercept()) {
    throw ConfigError("intercept sampler: design has no intercept column");
  }
  return RunIntercept(target, config, init, interval, output);
}

void WriteTraceCsv(const std::filesystem::path& path, const std::vector<Vector>& trace,
                   const ChainStats& stats) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "# proposed=" << stats.proposed << " accepted=" << stats.accepted
      << " rejected_bounds=" << stats.rejected_bounds
      << " rejected_constraint=" << stats.rejected_constraint
      << " acceptance_rate=" << FormatDouble(stats.acceptance_rate()) << '\n';
  out << "draw";
  const Eigen::Index k = trace.empty() ? 0 : trace.front().size();
  for (Eigen::Index j = 0; j < k; ++j) out << ",theta" << j;
  out << '\n';
  for (std::size_t d = 0; d < trace.size(); ++d) {
    out << d;
    for (Eigen::Index j = 0; j < k; ++j) out << ',' << FormatDouble(trace[d][j]);
    out << '\n';
  }
}

}  // namespace kngsynth
