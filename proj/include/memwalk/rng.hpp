// Copyright 2026 The memwalk Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <random>

namespace memwalk {

using Rng = std::mt19937_64;

/// One SplitMix64 output; advances \p state.
inline std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Uniform on [0, 1) from exactly one 64-bit word.
inline double uniform01(Rng& g) noexcept {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

/// The two independent streams of one replica. The memory stream feeds the
/// K-sequence and the step stream feeds neighbour selection, so the
/// K-sequence can be drawn before (or without) simulating any step.
struct ReplicaStreams {
  Rng memory;
  Rng steps;

  /// Seeds both streams from the SplitMix64 sequence started at
  /// master_seed XOR replica: first output for memory, second for steps.
  static ReplicaStreams derive(std::uint64_t master_seed, std::uint64_t replica) {
    std::uint64_t state = master_seed ^ replica;
    const std::uint64_t a = splitmix64(state);
    const std::uint64_t b = splitmix64(state);
    return ReplicaStreams{Rng(a), Rng(b)};
  }
};

}  // namespace memwalk
