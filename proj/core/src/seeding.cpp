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

#include "kngsynth/seeding.hpp"

#include <bit>
#include <cstring>

namespace kngsynth {

std::uint64_t StableHash(std::string_view bytes, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t Mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t DeriveSeed(std::uint64_t user_seed, std::string_view stream,
                         double tau, std::uint64_t replication) {
  std::uint64_t h = StableHash(stream);
  const auto tau_bits = std::bit_cast<std::uint64_t>(tau);
  char buf[16];
  std::memcpy(buf, &tau_bits, 8);
  std::memcpy(buf + 8, &replication, 8);
  h = StableHash(std::string_view(buf, sizeof(buf)), h);
  return user_seed ^ h;
}

}  // namespace kngsynth
