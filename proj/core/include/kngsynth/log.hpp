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

#ifndef KNGSYNTH_LOG_HPP_
#define KNGSYNTH_LOG_HPP_

#include <string_view>

namespace kngsynth::log {

enum class Level { kDebug = 0, kInfo = 1, kWarning = 2, kError = 3, kOff = 4 };

// Messages below the threshold are dropped. Default is kWarning.
void SetThreshold(Level level);
Level Threshold();

void Write(Level level, std::string_view message);

inline void Debug(std::string_view m) { Write(Level::kDebug, m); }
inline void Info(std::string_view m) { Write(Level::kInfo, m); }
inline void Warning(std::string_view m) { Write(Level::kWarning, m); }

// Number of warnings emitted since process start (or the last reset).
// Tests use this to assert that a diagnostic was raised.
long WarningCount();
void ResetWarningCount();

}  // namespace kngsynth::log

#endif  // KNGSYNTH_LOG_HPP_
