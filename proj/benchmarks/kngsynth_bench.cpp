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

#include <benchmark/benchmark.h>

#include "kngsynth/harness.hpp"
#include "kngsynth/kng.hpp"
#include "kngsynth/quantile_regression.hpp"
#include "kngsynth/utility.hpp"

namespace kngsynth {
namespace {

struct Problem {
  Matrix x;
  Vector y;
};

Problem Simulated(std::size_t n) {
  const Dataset d = SimulateData(1, n).train;
  Problem p{BuildDesignMatrix(d, {"X1"}), d.column_vector("X2")};
  p.x = ClipRowNorms(p.x, 46.0);
  return p;
}

void BM_LogDensity(benchmark::State& state) {
  const Problem p = Simulated(static_cast<std::size_t>(state.range(0)));
  const KngTarget t(p.x, p.y, 0.75, 0.1, 46.0);
  Vector theta(2);
  theta << 10.0, 3.0;
  for (auto _ : state) benchmark::DoNotOptimize(LogDensity(theta, t));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LogDensity)->Arg(1000)->Arg(5000)->Arg(20000);

void BM_JointChain(benchmark::State& state) {
  const Problem p = Simulated(5000);
  const KngTarget t(p.x, p.y, 0.75, 0.1, 46.0);
  MhConfig mh;
  mh.step_sizes = {0.05, 0.005};
  mh.iterations = state.range(0);
  mh.burn_in = 0;
  Vector init(2);
  init << 10.0, 3.0;
  for (auto _ : state) benchmark::DoNotOptimize(SampleAmh(t, mh, init));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_JointChain)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_InterceptChain(benchmark::State& state) {
  const Problem p = Simulated(5000);
  const KngTarget t(p.x, p.y, 0.75, 0.1, 46.0);
  MhConfig mh;
  mh.step_sizes = {0.05, 0.005};
  mh.iterations = state.range(0);
  mh.burn_in = 0;
  Vector init(2);
  init << 10.0, 3.0;
  for (auto _ : state) benchmark::DoNotOptimize(SampleInterceptAmh(t, mh, init));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_InterceptChain)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_FitNonprivate(benchmark::State& state) {
  const Problem p = Simulated(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(FitNonprivate(p.x, p.y, 0.9));
}
BENCHMARK(BM_FitNonprivate)->Arg(500)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_Pmse(benchmark::State& state) {
  const SimulatedPair d = SimulateData(2, 5000);
  for (auto _ : state) benchmark::DoNotOptimize(Pmse(d.train, d.test, state.range(0) != 0).pmse);
}
BENCHMARK(BM_Pmse)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace kngsynth

BENCHMARK_MAIN();
