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

#include "kngsynth/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace kngsynth::log {
namespace {

std::atomic<int> g_threshold{static_cast<int>(Level::kWarning)};
std::atomic<long> g_warnings{0};
std::mutex g_mu;

const char* Tag(Level level) {
  switch (level) {
    case Level::kDebug:
      return "debug";
    case Level::kInfo:
      return "info";
    case Level::kWarning:
      return "warning";
    case Level::kError:
      return "error";
    case Level::kOff:
      break;
  }
  return "";
}

}  // namespace

void SetThreshold(Level level) { g_threshold = static_cast<int>(level); }
Level Threshold() { return static_cast<Level>(g_threshold.load()); }

void Write(Level level, std::string_view message) {
  if (level == Level::kWarning) ++g_warnings;
  if (static_cast<int>(level) < g_threshold.load()) return;
  std::lock_guard<std::mutex> lock(g_mu);
  std::cerr << "[kngsynth " << Tag(level) << "] " << message << '\n';
}

long WarningCount() { return g_warnings.load(); }
void ResetWarningCount() { g_warnings = 0; }

}  // namespace kngsynth::log
