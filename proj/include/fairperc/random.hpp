// Copyright 2026 The Authors.
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

#ifndef FAIRPERC_RANDOM_HPP
#define FAIRPERC_RANDOM_HPP

#include <cstdint>
#include <random>

namespace fairperc {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; decorrelates seeds derived from (master, index).
inline constexpr std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t master, std::uint64_t index) { return Rng(mix_seed(master, index)); }

}  // namespace fairperc

#endif  // FAIRPERC_RANDOM_HPP
