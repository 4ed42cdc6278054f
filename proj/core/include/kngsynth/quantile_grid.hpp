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

#ifndef KNGSYNTH_QUANTILE_GRID_HPP_
#define KNGSYNTH_QUANTILE_GRID_HPP_

#include <cstddef>
#include <optional>
#include <vector>

namespace kngsynth {

// Strictly increasing quantile levels in (0, 1) plus the anchor ("main")
// subset. The median is always an anchor.
class QuantileGrid {
 public:
  // The median alone.
  QuantileGrid() : taus_{0.5}, main_taus_{0.5} {}
  QuantileGrid(std::vector<double> taus, std::vector<double> main_taus);

  // Only the median is an anchor; enough for stepwise and independent runs.
  static QuantileGrid WithMedianOnly(std::vector<double> taus);

  const std::vector<double>& taus() const { return taus_; }
  const std::vector<double>& main_taus() const { return main_taus_; }
  std::size_t size() const { return taus_.size(); }

  std::optional<std::size_t> find(double tau) const;
  std::size_t index_of(double tau) const;  // throws ConfigError
  bool is_main(double tau) const;
  std::size_t median_index() const { return index_of(0.5); }

  bool operator==(const QuantileGrid&) const = default;

 private:
  std::vector<double> taus_;
  std::vector<double> main_taus_;
};

// 1st, 3rd, ..., 47th, 50th, 53rd, ..., 99th percentiles (49 levels).
std::vector<double> SimulationTaus49();
// 5th, 10th, ..., 95th plus the 99th (20 levels).
std::vector<double> Taus20();
// 5th, 25th, 50th, 75th, 95th, 99th.
std::vector<double> DefaultMainTaus();

}  // namespace kngsynth

#endif  // KNGSYNTH_QUANTILE_GRID_HPP_
