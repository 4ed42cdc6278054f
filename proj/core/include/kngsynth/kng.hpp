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

#ifndef KNGSYNTH_KNG_HPP_
#define KNGSYNTH_KNG_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <vector>

#include "kngsynth/dataset.hpp"

namespace kngsynth {

inline constexpr double kDefaultBaseC = 1e-5;

// Norm applied to the empirical check-loss gradient. Only the Euclidean
// norm is implemented; the enum keeps the choice explicit in configs.
enum class GradientNorm { kEuclidean };

// Worst-case change of the check-loss gradient between neighbouring
// datasets when every design row has norm <= cx_bound: 2 (1 - tau) C_X.
double Sensitivity(double tau, double cx_bound);

// Everything that defines the unnormalized KNG log-density of one
// quantile's coefficients. The design and response are shared, so many
// targets over the same data stay cheap to build.
class KngTarget {
 public:
  KngTarget(std::shared_ptr<const Matrix> x, std::shared_ptr<const Vector> y, double tau,
            double epsilon, double cx_bound, double base_c = kDefaultBaseC);
  KngTarget(const Matrix& x, const Vector& y, double tau, double epsilon, double cx_bound,
            double base_c = kDefaultBaseC);

  const Matrix& x() const { return *x_; }
  const Vector& y() const { return *y_; }
  const std::shared_ptr<const Matrix>& shared_x() const { return x_; }
  const std::shared_ptr<const Vector>& shared_y() const { return y_; }
  double tau() const { return tau_; }
  double epsilon() const { return epsilon_; }
  double cx_bound() const { return cx_bound_; }
  double base_c() const { return base_c_; }
  Eigen::Index n() const { return x_->rows(); }
  Eigen::Index k() const { return x_->cols(); }

  // sum_i x_i, cached.
  const Vector& column_sums() const { return column_sums_; }
  // eps n / (4 (1 - tau) C_X), the multiplier of the mean-gradient norm.
  double scale() const;
  // True when column 0 is identically one.
  bool has_intercept() const { return has_intercept_; }

 private:
  void Validate() const;

  std::shared_ptr<const Matrix> x_;
  std::shared_ptr<const Vector> y_;
  double tau_;
  double epsilon_;
  double cx_bound_;
  double base_c_;
  Vector column_sums_;
  bool has_intercept_ = false;
};

// -(eps n / (4 (1 - tau) C_X)) || -tau mean(x) + (1/n) sum_{y_i <= x_i' theta} x_i ||_2
//   - c ||theta||_2^2
double LogDensity(const Vector& theta, const KngTarget& target);

// Same, given precomputed fitted values X theta.
double LogDensityFromFitted(const Vector& theta, const Vector& fitted, const KngTarget& target);

struct MhConfig {
  std::vector<double> step_sizes;  // Gaussian proposal sd per coordinate
  long iterations = 5000;
  long burn_in = 2500;
  std::uint64_t seed = 0;
  double soft_lower = -std::numeric_limits<double>::infinity();
  double soft_upper = std::numeric_limits<double>::infinity();
  int max_constraint_retries = 100;
  // Allow the O(log n) path for intercept-only targets. Results are
  // identical either way; tests switch it off to compare.
  bool allow_fast_path = true;

  void Validate(Eigen::Index k) const;  // throws ConfigError
};

// Extra acceptance predicate over (theta, X theta). Proposals failing it are
// rejected and the chain keeps its state.
using ThetaConstraint = std::function<bool(const Vector& theta, const Vector& fitted)>;

// Open interval restriction on the intercept for slope-frozen sampling.
struct InterceptInterval {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  bool contains(double b) const { return lower < b && b < upper; }
};

struct ChainStats {
  long proposed = 0;
  long accepted = 0;
  long rejected_bounds = 0;
  long rejected_constraint = 0;
  int restarts = 0;
  double acceptance_rate() const {
    return proposed > 0 ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0;
  }
};

// Optional outputs of one chain. When `trace` is set, every `thin`-th
// post-burn-in state is appended.
struct ChainOutput {
  ChainStats stats;
  std::vector<Vector>* trace = nullptr;
  long thin = 1;
};

// All-at-once random-walk Metropolis over every coordinate of theta.
// Proposals whose fitted values leave [soft_lower, soft_upper] on any row, or
// that fail `constraint`, are rejected outright. Returns the final state.
// If `init` is itself infeasible, up to max_constraint_retries jittered
// restarts are tried before throwing NumericError("constraint infeasible
// from init"). Deterministic given the config seed.
Vector SampleAmh(const KngTarget& target, const MhConfig& config, const Vector& init,
                 const ThetaConstraint& constraint = {}, ChainOutput* output = nullptr);

// Metropolis over the intercept alone with the remaining coordinates of
// `init` frozen; the density still uses the full design. The target must
// have an intercept column. The intercept is kept strictly inside
// `interval`. Costs O(log n) per step after an O(n log n) setup.
Vector SampleInterceptAmh(const KngTarget& target, const MhConfig& config, const Vector& init,
                          const InterceptInterval& interval = {}, ChainOutput* output = nullptr);

// Acceptance statistics and trace as CSV (iteration index, theta_0..k-1).
void WriteTraceCsv(const std::filesystem::path& path, const std::vector<Vector>& trace,
                   const ChainStats& stats);

}  // namespace kngsynth

#endif  // KNGSYNTH_KNG_HPP_
