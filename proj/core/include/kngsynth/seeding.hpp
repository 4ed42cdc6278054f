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

#ifndef KNGSYNTH_SEEDING_HPP_
#define KNGSYNTH_SEEDING_HPP_

#include <cstdint>
#include <random>
#include <string_view>

namespace kngsynth {

using Rng = std::mt19937_64;

// FNV-1a over raw bytes. Stable across runs and platforms of equal
// endianness, unlike std::hash.
std::uint64_t StableHash(std::string_view bytes,
                         std::uint64_t basis = 0xcbf29ce484222325ULL);

// SplitMix64 finalizer; decorrelates nearby integer seeds.
std::uint64_t Mix64(std::uint64_t x);

// Seed for one chain: user seed XOR a stable hash of
// (stream name, tau, replication index), then mixed.
std::uint64_t DeriveSeed(std::uint64_t user_seed, std::string_view stream,
                         double tau = 0.0, std::uint64_t replication = 0);

inline Rng MakeRng(std::uint64_t seed) { return Rng(Mix64(seed)); }

}  // namespace kngsynth

#endif  // KNGSYNTH_SEEDING_HPP_
