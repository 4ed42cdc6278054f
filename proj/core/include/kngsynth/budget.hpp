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

#ifndef KNGSYNTH_BUDGET_HPP_
#define KNGSYNTH_BUDGET_HPP_

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace kngsynth {

// Relative tolerance for "children sum to the parent".
inline constexpr double kBudgetRelTol = 1e-12;
// Tolerance on user-supplied weights summing to one.
inline constexpr double kWeightSumTol = 1e-9;

struct Allocation {
  std::string name;
  double epsilon = 0.0;
  bool operator==(const Allocation&) const = default;
};

using Weights = std::vector<std::pair<std::string, double>>;

// Splits node_epsilon by weights. Each child receives
// node_epsilon * w / sum(w); the weights are renormalized by their exact sum
// so the children conserve the parent to rounding, never by subtraction.
// Throws ConfigError on a negative weight or a sum off one by > 1e-9.
std::vector<Allocation> SplitBudget(double node_epsilon, const Weights& weights);

// Hierarchical privacy-budget allocation. A node either is a leaf (its
// epsilon is spent by one mechanism call) or is split into children whose
// epsilons sum to its own.
class BudgetTree {
 public:
  BudgetTree() = default;
  BudgetTree(std::string name, double epsilon);

  const std::string& name() const { return name_; }
  double epsilon() const { return epsilon_; }
  bool is_leaf() const { return children_.empty(); }
  const std::vector<BudgetTree>& children() const { return children_; }

  // Replaces any existing children with a weighted split of this node.
  BudgetTree& Split(const Weights& weights);
  BudgetTree& child(std::string_view name);
  const BudgetTree& child(std::string_view name) const;

  // Leaves with '/'-joined paths from this node.
  std::vector<Allocation> Leaves() const;
  double LeafSum() const;

  // Throws NumericError if any node's children do not sum to it within
  // kBudgetRelTol, or if a leaf is not strictly positive.
  void CheckConservation() const;

 private:
  void CollectLeaves(const std::string& prefix, std::vector<Allocation>& out) const;

  std::string name_;
  double epsilon_ = 0.0;
  std::vector<BudgetTree> children_;
};

// Sum of allocations using compensated summation.
double LedgerTotal(const std::vector<Allocation>& ledger);

// |a - b| <= kBudgetRelTol * max(|a|, |b|).
bool BudgetClose(double a, double b);

}  // namespace kngsynth

#endif  // KNGSYNTH_BUDGET_HPP_
