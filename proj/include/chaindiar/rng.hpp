// Copyright (c) 2026 The chaindiar authors
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

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace chaindiar {

using Rng = std::mt19937_64;

// Explicit draw helpers instead of std::*_distribution so that the value
// sequence is pinned by this code alone, not by the standard library
// implementation.

/// Uniform in [0, 1) with 53 random mantissa bits.
inline double uniform_real(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform in [lo, hi).
inline double uniform_real(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform_real(rng);
}

/// Uniform integer in [0, n). Rejection-free modulo is fine here: n is tiny
/// compared to 2^64, the bias is unobservable.
inline std::uint64_t uniform_int(Rng& rng, std::uint64_t n) {
  return rng() % n;
}

/// Exponential with the given mean.
inline double exponential(Rng& rng, double mean) {
  return -mean * std::log1p(-uniform_real(rng));
}

/// Bernoulli coin with probability p of returning true.
inline bool coin(Rng& rng, double p) { return uniform_real(rng) < p; }

/// Deterministic per-stream seed derivation (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// In-place Fisher-Yates shuffle driven by uniform_int above.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(uniform_int(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace chaindiar
