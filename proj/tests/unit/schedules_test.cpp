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
#include <numeric>
#include <random>

#include "kngsynth/error.hpp"
#include "kngsynth/quantile_regression.hpp"
#include "kngsynth/schedules.hpp"

namespace kngsynth {

// Readable parameter values in test listings.
inline void PrintTo(Method m, std::ostream* os) { *os << MethodName(m); }

namespace {

double Sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

TEST(Methods, NamesRoundTrip) {
  for (Method m : AllMethods()) EXPECT_EQ(ParseMethod(MethodName(m)), m);
  EXPECT_THROW(ParseMethod("bogus"), ConfigError);
  EXPECT_THROW(ModeOf(Method::kNonprivate), ConfigError);
  EXPECT_FALSE(IsPrivate(Method::kNonprivate));
  EXPECT_TRUE(IsPrivate(Method::kIndependent));
}

TEST(Allocation, StepwiseMedianEighty) {
  QuantileSchedule s{QuantileGrid::WithMedianOnly(Taus20()), {Scheme::kStepwise, SlopeRule::kFixed},
                     {0.8, 0.8}};
  const auto e = s.EpsilonPerTau(1.0);
  ASSERT_EQ(e.size(), 20u);
  for (std::size_t i = 0; i < e.size(); ++i) {
    EXPECT_NEAR(e[i], s.grid.taus()[i] == 0.5 ? 0.8 : 0.2 / 19.0, 1e-15);
  }
  EXPECT_NEAR(Sum(e), 1.0, 1e-12);
}

TEST(Allocation, StepwiseMedianTwentyAtHalfEpsilon) {
  QuantileSchedule s{QuantileGrid::WithMedianOnly(Taus20()), {Scheme::kStepwise, SlopeRule::kFixed},
                     {0.2, 0.8}};
  const auto e = s.EpsilonPerTau(0.5);
  const double other = e[0] / 0.5;
  EXPECT_NEAR(other, 0.0421, 5e-5);
}

TEST(Allocation, SandwichMatchesHandSplit) {
  QuantileSchedule s{QuantileGrid(Taus20(), DefaultMainTaus()), {Scheme::kSandwich, SlopeRule::kFixed},
                     {0.25, 0.6}};
  const auto e = s.EpsilonPerTau(2.0);
  const double anchors = 0.6 * 2.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const double t = s.grid.taus()[i];
    double want = 0.4 * 2.0 / 14.0;
    if (t == 0.5) {
      want = 0.25 * anchors;
    } else if (s.grid.is_main(t)) {
      want = 0.75 * anchors / 5.0;
    }
    EXPECT_NEAR(e[i], want, 1e-14) << "tau " << t;
  }
  EXPECT_NEAR(Sum(e), 2.0, 1e-12);
}

TEST(Allocation, IndependentIsEqual) {
  QuantileSchedule s{QuantileGrid::WithMedianOnly(Taus20()), {Scheme::kIndependent, SlopeRule::kVarying},
                     {0.8, 0.8}};
  for (double v : s.EpsilonPerTau(1.0)) EXPECT_NEAR(v, 0.05, 1e-15);
}

TEST(Allocation, TreeConservesOnRandomGrids) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> share(0.01, 0.99);
  std::uniform_real_distribution<double> eps(0.01, 10.0);
  const Scheme schemes[] = {Scheme::kStepwise, Scheme::kSandwich, Scheme::kIndependent};
  for (int trial = 0; trial < 200; ++trial) {
    QuantileSchedule s{QuantileGrid(SimulationTaus49(), DefaultMainTaus()),
                       {schemes[trial % 3], SlopeRule::kFixed}, {share(rng), share(rng)}};
    const double e = eps(rng);
    const BudgetTree tree = s.Allocate("X", e);
    EXPECT_NO_THROW(tree.CheckConservation());
    EXPECT_EQ(tree.Leaves().size(), 49u);
    EXPECT_TRUE(BudgetClose(tree.LeafSum(), e));
  }
}

TEST(Allocation, ValidateRejectsBadShares) {
  QuantileSchedule s{QuantileGrid::WithMedianOnly(Taus20()), {Scheme::kStepwise, SlopeRule::kFixed},
                     {1.5, 0.8}};
  EXPECT_THROW(s.Validate(), ConfigError);
}

TEST(Constraints, FixedSlopeInterceptOrdering) {
  QuantileFit lo{0.25, Vector::Constant(2, 1.0)};
  QuantileFit hi{0.75, Vector::Constant(2, 3.0)};
  QuantileFit c{0.5, Vector::Constant(2, 2.0)};
  EXPECT_TRUE(ConstraintFixedSlope(c, {&lo, &hi}));
  c.beta[0] = 3.0;
  EXPECT_FALSE(ConstraintFixedSlope(c, {&lo, &hi}));
  EXPECT_TRUE(ConstraintFixedSlope(c, {&lo, nullptr}));
}

TEST(Constraints, DataCheckEveryRow) {
  Matrix x(3, 2);
  x << 1, 0, 1, 1, 1, 2;
  QuantileFit lo{0.25, Vector(2)};
  lo.beta << 0.0, 1.0;
  QuantileFit c{0.5, Vector(2)};
  c.beta << 0.5, 0.9;
  EXPECT_TRUE(ConstraintDataCheck(c, {&lo, nullptr}, x));
  c.beta << 0.5, 0.5;  // crosses at x = 2
  EXPECT_FALSE(ConstraintDataCheck(c, {&lo, nullptr}, x));
  EXPECT_THROW(ConstraintDataCheck(c, {&lo, nullptr}, Matrix::Ones(3, 3)), DataError);
}

TEST(HeuristicSteps, Formula) {
  std::vector<double> y(100);
  std::iota(y.begin(), y.end(), 0.0);
  const auto s = HeuristicStepSizes(y, 3);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_GT(s[0], 0.0);
  EXPECT_DOUBLE_EQ(s[1], 0.1 * s[0]);
  EXPECT_DOUBLE_EQ(s[2], 0.1 * s[0]);
}

struct Data {
  std::shared_ptr<Matrix> x;
  std::shared_ptr<Vector> y;
};

Data Simulated(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> e(0.5);
  auto x = std::make_shared<Matrix>(n, 2);
  auto y = std::make_shared<Vector>(n);
  for (int i = 0; i < n; ++i) {
    (*x)(i, 0) = 1.0;
    (*x)(i, 1) = std::min(e(rng), 8.0);
    (*y)[i] = 1.0 + (*x)(i, 1) + e(rng);
  }
  return {x, y};
}

ScheduleResult RunSmall(Method m, std::uint64_t seed) {
  const Data d = Simulated(300, seed);
  ScheduleInput in;
  in.x = d.x;
  in.y = d.y;
  in.epsilon = 2.0;
  in.cx_bound = std::sqrt(65.0);
  in.name = "Y";
  const QuantileSchedule s{QuantileGrid({0.1, 0.25, 0.4, 0.5, 0.6, 0.75, 0.9}, {0.1, 0.5, 0.9}),
                           ModeOf(m), {0.5, 0.6}};
  MhConfig mh;
  const std::vector<double> yv(d.y->begin(), d.y->end());
  mh.step_sizes = HeuristicStepSizes(yv, 2);
  mh.iterations = 600;
  mh.burn_in = 300;
  mh.seed = seed;
  mh.soft_lower = 0.0;
  mh.soft_upper = 100.0;
  return RunSchedule(in, s, mh);
}

class OrderedMethods : public ::testing::TestWithParam<Method> {};

TEST_P(OrderedMethods, NoCrossingsAndFullLedger) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const ScheduleResult r = RunSmall(GetParam(), seed);
    ASSERT_EQ(r.fits.size(), 7u);
    ASSERT_EQ(r.ledger.size(), 7u);
    EXPECT_TRUE(BudgetClose(LedgerTotal(r.ledger), 2.0));
    const Data d = Simulated(300, seed);
    EXPECT_TRUE(DetectCrossing(r.fits, *d.x).empty()) << "seed " << seed;
    for (std::size_t i = 1; i < r.fits.size(); ++i) EXPECT_LT(r.fits[i - 1].tau, r.fits[i].tau);
  }
}

INSTANTIATE_TEST_SUITE_P(All, OrderedMethods,
                         ::testing::Values(Method::kStepwiseFixed, Method::kStepwiseVarying,
                                           Method::kSandwichFixed, Method::kSandwichVarying),
                         [](const auto& info) {
                           std::string s(MethodName(info.param));
                           for (char& c : s) if (c == '-') c = '_';
                           return s;
                         });

TEST(Schedules, FixedSlopeSharesMedianSlope) {
  for (Method m : {Method::kStepwiseFixed, Method::kSandwichFixed}) {
    const ScheduleResult r = RunSmall(m, 9);
    for (const auto& f : r.fits) EXPECT_EQ(f.beta[1], r.fits[3].beta[1]) << MethodName(m);
  }
}

TEST(Schedules, DeterministicGivenSeed) {
  const ScheduleResult a = RunSmall(Method::kSandwichVarying, 3);
  const ScheduleResult b = RunSmall(Method::kSandwichVarying, 3);
  for (std::size_t i = 0; i < a.fits.size(); ++i) EXPECT_EQ(a.fits[i].beta, b.fits[i].beta);
}

TEST(Schedules, IndependentSpendsEvenly) {
  const ScheduleResult r = RunSmall(Method::kIndependent, 2);
  for (const auto& a : r.ledger) EXPECT_NEAR(a.epsilon, 2.0 / 7.0, 1e-15);
}

TEST(NonprivateFits, MatchDirectFits) {
  const Data d = Simulated(200, 4);
  const QuantileGrid g = QuantileGrid::WithMedianOnly({0.2, 0.5, 0.8});
  const auto fits = NonprivateFits(*d.x, *d.y, g);
  for (const auto& f : fits) EXPECT_EQ(f.beta, FitNonprivate(*d.x, *d.y, f.tau).beta);
}

}  // namespace
}  // namespace kngsynth
