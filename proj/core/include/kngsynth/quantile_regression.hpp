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

#ifndef KNGSYNTH_QUANTILE_REGRESSION_HPP_
#define KNGSYNTH_QUANTILE_REGRESSION_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "kngsynth/dataset.hpp"

namespace kngsynth {

// Coefficients of one conditional quantile: q_tau(x) = x' beta.
struct QuantileFit {
  double tau = 0.5;
  Vector beta;
};

// rho_tau(x) = x (tau - 1{x <= 0}).
double CheckLoss(double x, double tau);

// Sum of check losses of the residuals y - X beta.
double CheckObjective(const Matrix& x, const Vector& y, const Vector& beta, double tau);

struct QrSolverOptions {
  // Final smoothing width relative to Scale(y).
  double smoothing = 1e-4;
  int max_newton_iterations = 100;
  // Ridge added to the smoothed Hessian when X is rank deficient.
  double rank_ridge = 1e-8;
};

// Non-private linear quantile regression. A smoothed (Huberized) check loss
// is minimized by damped Newton with a shrinking smoothing width; the result
// is then polished to an exact optimum by descending along the edges of the
// piecewise-linear objective. When the minimizer is not unique, a final
// sweep lowers each coordinate in turn as far as the objective stays flat,
// so the returned point is the infimum reached by that deterministic sweep.
// Rank-deficient X is ridge-regularized with a logged warning.
QuantileFit FitNonprivate(const Matrix& x, const Vector& y, double tau,
                          const QrSolverOptions& options = {});

struct Crossing {
  std::size_t row = 0;
  double tau_lower = 0.0;
  double tau_upper = 0.0;
  bool operator==(const Crossing&) const = default;
};

// Every (row, adjacent tau pair) with x_i' beta_tau > x_i' beta_tau'. Fits
// must be sorted by strictly increasing tau. Throws on dimension mismatch.
std::vector<Crossing> DetectCrossing(std::span<const QuantileFit> fits, const Matrix& x);

}  // namespace kngsynth

#endif  // KNGSYNTH_QUANTILE_REGRESSION_HPP_
