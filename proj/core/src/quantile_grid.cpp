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

#include "kngsynth/quantile_grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kngsynth/error.hpp"

namespace kngsynth {
namespace {

constexpr double kTauMatch = 1e-12;

bool Contains(const std::vector<double>& v, double x) {
  return std::any_of(v.begin(), v.end(), [&](double t) { return std::abs(t - x) <= kTauMatch; });
}

}  // namespace

QuantileGrid::QuantileGrid(std::vector<double> taus, std::vector<double> main_taus)
    : taus_(std::move(taus)), main_taus_(std::move(main_taus)) {
  if (taus_.empty()) throw ConfigError("grid: no quantile levels");
  for (std::size_t i = 0; i < taus_.size(); ++i) {
    if (!(taus_[i] > 0.0 && taus_[i] < 1.0)) {
      throw ConfigError("grid: tau " + std::to_string(taus_[i]) + " outside (0,1)");
    }
    if (i > 0 && !(taus_[i] > taus_[i - 1])) {
      throw ConfigError("grid: taus must be strictly increasing");
    }
  }
  std::sort(main_taus_.begin(), main_taus_.end());
  for (double m : main_taus_) {
    if (!Contains(taus_, m)) {
      throw ConfigError("grid: main tau " + std::to_string(m) + " not in grid");
    }
  }
  if (!Contains(main_taus_, 0.5)) throw ConfigError("grid: median must be a main quantile");
  // Snap anchors to the exact grid values.
  for (double& m : main_taus_) m = taus_[*find(m)];
}

QuantileGrid QuantileGrid::WithMedianOnly(std::vector<double> taus) {
  return QuantileGrid(std::move(taus), {0.5});
}

std::optional<std::size_t> QuantileGrid::find(double tau) const {
  for (std::size_t i = 0; i < taus_.size(); ++i) {
    if (std::abs(taus_[i] - tau) <= kTauMatch) return i;
  }
  return std::nullopt;
}

std::size_t QuantileGrid::index_of(double tau) const {
  auto i = find(tau);
  if (!i) throw ConfigError("grid: tau " + std::to_string(tau) + " not in grid");
  return *i;
}

bool QuantileGrid::is_main(double tau) const { return Contains(main_taus_, tau); }

std::vector<double> SimulationTaus49() {
  std::vector<double> t;
  for (int p = 1; p <= 47; p += 2) t.push_back(p / 100.0);
  t.push_back(0.5);
  for (int p = 53; p <= 99; p += 2) t.push_back(p / 100.0);
  return t;
}

std::vector<double> Taus20() {
  std::vector<double> t;
  for (int p = 5; p <= 95; p += 5) t.push_back(p / 100.0);
  t.push_back(0.99);
  return t;
}

std::vector<double> DefaultMainTaus() { return {0.05, 0.25, 0.5, 0.75, 0.95, 0.99}; }

}  // namespace kngsynth
