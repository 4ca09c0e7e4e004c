// Copyright 2026 The ataralab Authors
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

#ifndef ATARALAB_CORE_RNG_H_
#define ATARALAB_CORE_RNG_H_

#include <cmath>
#include <cstdint>

namespace atl {

// Deterministic counter-free PRNG (xoshiro256** seeded through splitmix64).
// All sampling helpers are implemented here so that streams do not depend
// on the C++ standard library's unspecified distribution algorithms.
class Rng {
 public:
  explicit Rng(uint64_t seed) {
    uint64_t x = seed;
    for (auto& s : state_) s = SplitMix64(&x);
    has_cached_gauss_ = false;
  }

  // Child stream derivation rule: child(seed_stream, index) mixes the parent
  // stream identity with the index. Documented contract: children with
  // distinct indices are independent streams, reproducible across runs.
  Rng Child(uint64_t index) const {
    uint64_t x = state_[0] ^ (0x9E3779B97F4A7C15ULL * (index + 1));
    x ^= state_[3] + 0xD1B54A32D192ED03ULL;
    return Rng(x);
  }

  uint64_t NextU64() {
    uint64_t* s = state_;
    const uint64_t result = Rotl(s[1] * 5, 7) * 9;
    const uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = Rotl(s[3], 45);
    return result;
  }

  // Uniform in [0, 1).
  double Uniform() { return static_cast<double>(NextU64() >> 11) * 0x1.0p-53; }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  // Integer in [0, n).
  uint64_t Below(uint64_t n) { return n ? NextU64() % n : 0; }

  // Standard normal via Box-Muller (pair-cached).
  double Gauss() {
    if (has_cached_gauss_) {
      has_cached_gauss_ = false;
      return cached_gauss_;
    }
    double u1 = 0.0;
    while (u1 <= 1e-300) u1 = Uniform();
    const double u2 = Uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cached_gauss_ = r * std::sin(a);
    has_cached_gauss_ = true;
    return r * std::cos(a);
  }

  bool Bernoulli(double p) { return Uniform() < p; }

 private:
  static uint64_t SplitMix64(uint64_t* x) {
    uint64_t z = (*x += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  static uint64_t Rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  uint64_t state_[4];
  double cached_gauss_ = 0.0;
  bool has_cached_gauss_;
};

}  // namespace atl

#endif  // ATARALAB_CORE_RNG_H_
