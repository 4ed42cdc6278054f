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

#ifndef KNGSYNTH_PARALLEL_HPP_
#define KNGSYNTH_PARALLEL_HPP_

#include <cstddef>
#include <functional>

namespace kngsynth {

// Runs body(i) for i in [0, count) on up to `threads` workers (0 means
// hardware concurrency). Each index runs exactly once; callers write results
// into slot i so the merged output does not depend on completion order.
// The first exception thrown by any body is rethrown after all workers join.
void ParallelFor(std::size_t count, const std::function<void(std::size_t)>& body,
                 unsigned threads = 0);

}  // namespace kngsynth

#endif  // KNGSYNTH_PARALLEL_HPP_
