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

#include "kngsynth/budget.hpp"

#include <algorithm>
#include <cmath>

#include "kngsynth/error.hpp"

namespace kngsynth {

double LedgerTotal(const std::vector<Allocation>& ledger) {
  // Kahan-Babuska.
  double sum = 0.0;
  double comp = 0.0;
  for (const auto& a : ledger) {
    const double t = sum + a.epsilon;
    if (std::abs(sum) >= std::abs(a.epsilon)) {
      comp += (sum - t) + a.epsilon;
    } else {
      comp += (a.epsilon - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

bool BudgetClose(double a, double b) {
  return std::abs(a - b) <= kBudgetRelTol * std::max(std::abs(a), std::abs(b));
}

std::vector<Allocation> SplitBudget(double node_epsilon, const Weights& weights) {
  if (!(node_epsilon > 0.0) || !std::isfinite(node_epsilon)) {
    throw ConfigError("budget: node epsilon must be positive and finite");
  }
  if (weights.empty()) throw ConfigError("budget: empty weight list");
  double total = 0.0;
  for (const auto& [name, w] : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw ConfigError("budget: negative or non-finite weight for " + name);
    }
    total += w;
  }
  if (std::abs(total - 1.0) > kWeightSumTol) {
    throw ConfigError("budget: weights sum to " + std::to_string(total) + ", expected 1");
  }
  std::vector<Allocation> out;
  out.reserve(weights.size());
  for (const auto& [name, w] : weights) out.push_back({name, node_epsilon * (w / total)});
  return out;
}

BudgetTree::BudgetTree(std::string name, double epsilon)
    : name_(std::move(name)), epsilon_(epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ConfigError("budget: epsilon for " + name_ + " must be positive and finite");
  }
}

BudgetTree& BudgetTree::Split(const Weights& weights) {
  children_.clear();
  for (auto& a : SplitBudget(epsilon_, weights)) {
    BudgetTree node;
    node.name_ = std::move(a.name);
    node.epsilon_ = a.epsilon;
    children_.push_back(std::move(node));
  }
  return *this;
}

BudgetTree& BudgetTree::child(std::string_view name) {
  for (auto& c : children_) {
    if (c.name_ == name) return c;
  }
  throw ConfigError("budget: no child " + std::string(name) + " under " + name_);
}

const BudgetTree& BudgetTree::child(std::string_view name) const {
  return const_cast<BudgetTree*>(this)->child(name);
}

void BudgetTree::CollectLeaves(const std::string& prefix, std::vector<Allocation>& out) const {
  const std::string path = prefix.empty() ? name_ : prefix + "/" + name_;
  if (is_leaf()) {
    out.push_back({path, epsilon_});
    return;
  }
  for (const auto& c : children_) c.CollectLeaves(path, out);
}

std::vector<Allocation> BudgetTree::Leaves() const {
  std::vector<Allocation> out;
  CollectLeaves("", out);
  return out;
}

double BudgetTree::LeafSum() const { return LedgerTotal(Leaves()); }

void BudgetTree::CheckConservation() const {
  if (is_leaf()) {
    if (!(epsilon_ > 0.0)) throw NumericError("budget: leaf " + name_ + " has no budget");
    return;
  }
  std::vector<Allocation> direct;
  for (const auto& c : children_) direct.push_back({c.name_, c.epsilon_});
  if (!BudgetClose(LedgerTotal(direct), epsilon_)) {
    throw NumericError("budget: children of " + name_ + " do not sum to its epsilon");
  }
  for (const auto& c : children_) c.CheckConservation();
}

}  // namespace kngsynth
