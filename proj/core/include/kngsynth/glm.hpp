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

#ifndef KNGSYNTH_GLM_HPP_
#define KNGSYNTH_GLM_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "kngsynth/dataset.hpp"

namespace kngsynth {

enum class PenaltyKind { kNone, kRidge, kLasso };

struct Penalty {
  PenaltyKind kind = PenaltyKind::kNone;
  double lambda = 0.0;

  static Penalty None() { return {}; }
  static Penalty Ridge(double lambda) { return {PenaltyKind::kRidge, lambda}; }
  static Penalty Lasso(double lambda) { return {PenaltyKind::kLasso, lambda}; }
  std::string ToString() const;  // "none", "ridge(1e-04)", "lasso(0.5)"
};

struct GlmFit {
  Vector coefficients;
  Vector standard_errors;  // OLS only; empty otherwise
  bool converged = false;
  int iterations = 0;
  Penalty penalty;
  // Log-likelihood after each IRLS iteration (unpenalized logistic only).
  std::vector<double> loglik_path;
};

// Ordinary least squares. Throws DataError when n <= k or X is rank
// deficient.
GlmFit FitOls(const Matrix& x, const Vector& y);

struct LogisticOptions {
  int max_iterations = 100;
  double gradient_tolerance = 1e-8;  // on the norm of the mean score
  // Coordinate descent stops when no coefficient moves more than this.
  double cd_tolerance = 1e-10;
  int max_cd_sweeps = 10000;
};

// Logistic regression of binary y on x. The first column of x is treated as
// the intercept and is never penalized. The unpenalized fit uses IRLS and is
// flagged non-converged on separation or when the gradient tolerance is not
// reached. Penalized fits minimize
//   -loglik / n + lambda * P(beta_{1..})
// with P = ||.||^2 / 2 (ridge) or ||.||_1 (lasso), by coordinate descent.
// Throws DataError on labels outside {0,1} or a single class.
GlmFit FitLogistic(const Matrix& x, const Vector& y, Penalty penalty = {},
                   const LogisticOptions& options = {});

Vector PredictProbability(const Matrix& x, const Vector& beta);
double LogisticLogLik(const Matrix& x, const Vector& y, const Vector& beta);
// Gradient of the log-likelihood.
Vector LogisticGradient(const Matrix& x, const Vector& y, const Vector& beta);

// Unpenalized logistic fit; on non-convergence, lasso with lambda chosen by
// 5-fold cross-validated deviance over a 10-point log grid. The returned
// fit's penalty records which variant was used.
GlmFit FitClassifierWithFallback(const Matrix& x, const Vector& y, std::uint64_t seed);

}  // namespace kngsynth

#endif  // KNGSYNTH_GLM_HPP_
