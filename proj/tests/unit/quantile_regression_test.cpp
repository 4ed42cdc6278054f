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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "kngsynth/error.hpp"
#include "kngsynth/quantile_regression.hpp"

namespace kngsynth {
namespace {

TEST(CheckLoss, Examples) {
  EXPECT_DOUBLE_EQ(CheckLoss(2.0, 0.5), 1.0);
  EXPECT_DOUBLE_EQ(CheckLoss(0.0, 0.3), 0.0);
  EXPECT_DOUBLE_EQ(CheckLoss(0.0, 0.9), 0.0);
  EXPECT_NEAR(CheckLoss(-1.0, 0.9), 0.1, 1e-15);
}

TEST(CheckLoss, NonnegativeAndHalfAbsAtMedian) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z(0.0, 10.0);
  std::uniform_real_distribution<double> u(1e-3, 1.0 - 1e-3);
  for (int i = 0; i < 1000; ++i) {
    const double x = z(rng);
    const double t = u(rng);
    EXPECT_GT(CheckLoss(x, t), 0.0);
    EXPECT_DOUBLE_EQ(CheckLoss(x, 0.5), std::abs(x) / 2.0);
  }
}

Matrix Ones(Eigen::Index n) { return Matrix::Ones(n, 1); }

TEST(FitNonprivate, SampleMedian) {
  Vector y(3);
  y << 1, 2, 3;
  const QuantileFit f = FitNonprivate(Ones(3), y, 0.5);
  EXPECT_NEAR(f.beta[0], 2.0, 1e-9);
}

TEST(FitNonprivate, TieTakesInfimum) {
  Vector y(4);
  y << 1, 2, 3, 4;
  const QuantileFit f = FitNonprivate(Ones(4), y, 0.5);
  EXPECT_NEAR(f.beta[0], 2.0, 1e-9);
}

// Every basic solution of a two-parameter problem interpolates two points,
// so enumerating all pairs finds the exact optimum.
double VertexOracle(const Matrix& x, const Vector& y, double tau) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < x.rows(); ++j) {
      Eigen::Matrix2d a;
      a << x(i, 0), x(i, 1), x(j, 0), x(j, 1);
      if (std::abs(a.determinant()) < 1e-12) continue;
      const Eigen::Vector2d b = a.inverse() * Eigen::Vector2d(y[i], y[j]);
      best = std::min(best, CheckObjective(x, y, Vector(b), tau));
    }
  }
  return best;
}

TEST(FitNonprivate, MatchesVertexEnumerationOnRandomInstances) {
  std::mt19937_64 rng(2024);
  std::exponential_distribution<double> e(0.1);
  std::uniform_int_distribution<int> size(5, 50);
  std::uniform_real_distribution<double> taus(0.02, 0.98);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = size(rng);
    Matrix x(n, 2);
    Vector y(n);
    for (int i = 0; i < n; ++i) {
      x(i, 0) = 1.0;
      x(i, 1) = e(rng);
      y[i] = 4.0 + 3.0 * x(i, 1) + e(rng);
    }
    const double tau = taus(rng);
    const QuantileFit f = FitNonprivate(x, y, tau);
    const double oracle = VertexOracle(x, y, tau);
    EXPECT_LE(CheckObjective(x, y, f.beta, tau), oracle + 1e-6 * std::max(1.0, oracle))
        << "trial " << trial << " n=" << n << " tau=" << tau;
  }
}

TEST(FitNonprivate, InterceptOnlyMonotoneInTau) {
  std::mt19937_64 rng(9);
  std::exponential_distribution<double> e(0.1);
  Vector y(301);
  for (double& v : y) v = e(rng);
  double prev = -std::numeric_limits<double>::infinity();
  for (double t = 0.05; t < 0.96; t += 0.05) {
    const double b = FitNonprivate(Ones(y.size()), y, t).beta[0];
    EXPECT_GE(b, prev);
    prev = b;
  }
}

TEST(FitNonprivate, RejectsTooFewRows) {
  Matrix x(1, 2);
  x << 1, 2;
  Vector y(1);
  y << 3;
  EXPECT_THROW(FitNonprivate(x, y, 0.5), Error);
}

TEST(DetectCrossing, IdenticalFitsDoNotCross) {
  Vector b(2);
  b << 1.0, 2.0;
  const std::vector<QuantileFit> fits{{0.25, b}, {0.5, b}, {0.75, b}};
  Matrix x(3, 2);
  x << 1, 0, 1, 1, 1, 5;
  EXPECT_TRUE(DetectCrossing(fits, x).empty());
}

TEST(DetectCrossing, ReportsEveryRow) {
  Vector hi(1);
  hi << 1.0;
  Vector lo(1);
  lo << 0.0;
  const std::vector<QuantileFit> fits{{0.5, hi}, {0.9, lo}};
  const auto c = DetectCrossing(fits, Ones(4));
  ASSERT_EQ(c.size(), 4u);
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_EQ(c[i].row, i);
    EXPECT_EQ(c[i].tau_lower, 0.5);
    EXPECT_EQ(c[i].tau_upper, 0.9);
  }
}

TEST(DetectCrossing, DimensionMismatchThrows) {
  Vector b(2);
  b << 1.0, 2.0;
  const std::vector<QuantileFit> fits{{0.5, b}};
  EXPECT_THROW(DetectCrossing(fits, Ones(3)), DataError);
}

}  // namespace
}  // namespace kngsynth
