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

#pragma once

// Platform-stable random helpers. std::mt19937_64 output is fully specified by
// the standard, but the std distributions are not, so sampling is done here.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace lig {

using Rng = std::mt19937_64;

// Uniform integer in [0, n) by rejection sampling. n must be > 0.
inline std::uint64_t UniformIndex(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = Rng::max() - Rng::max() % n;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % n;
}

// Uniform double in [0, 1) from the top 53 bits.
inline double UniformUnit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller; consumes two draws per call.
inline double StandardNormal(Rng& rng) {
  double u1 = UniformUnit(rng);
  while (u1 <= 0.0) u1 = UniformUnit(rng);
  const double u2 = UniformUnit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Fisher-Yates, front to back.
template <typename T>
void Shuffle(Rng& rng, std::vector<T>& values) {
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    const std::size_t j = i + static_cast<std::size_t>(UniformIndex(rng, values.size() - i));
    std::swap(values[i], values[j]);
  }
}

// First n entries of a partial Fisher-Yates over [0, size).
inline std::vector<std::size_t> SampleWithoutReplacement(Rng& rng, std::size_t size,
                                                         std::size_t n) {
  std::vector<std::size_t> idx(size);
  for (std::size_t i = 0; i < size; ++i) idx[i] = i;
  for (std::size_t i = 0; i < n && i + 1 < size; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(UniformIndex(rng, size - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n);
  return idx;
}

// Derives an independent stream seed from a base seed and a salt.
inline std::uint64_t MixSeed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace lig
