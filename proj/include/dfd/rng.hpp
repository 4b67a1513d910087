// Copyright 2026 The dfd Authors. All Rights Reserved.
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

#ifndef DFD_RNG_HPP_
#define DFD_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace dfd {

// Generator version. Learner and worker must regenerate identical noise from
// a transmitted seed, so the generator (splitmix64) and the normal transform
// (Box-Muller) are pinned. Any change here is a wire-compatibility break and
// requires a bump.
inline constexpr int kNoiseVersion = 1;

// splitmix64 step (Steele, Lea, Vigna). Advances `state` and returns the next
// 64-bit output.
inline std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Stateless bijective mixer (the splitmix64 finalizer). Distinct inputs give
// distinct outputs.
inline std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Deterministic random stream: splitmix64 outputs mapped to doubles, with
// Box-Muller for normals. One instance is single-owner; streams with the same
// seed produce the same sequence on every platform with IEEE-754 doubles and
// the same libm.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next_u64() noexcept { return splitmix64(state_); }

  // Uniform on (0, 1]. Never returns 0, so log() below is safe.
  double uniform() noexcept {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform();
  }

  // Integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept { return next_u64() % n; }

  // Standard normal draw via Box-Muller; the second value of each pair is
  // cached so consecutive calls consume one uniform pair per two draws.
  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * kPi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  static constexpr double kPi = 3.141592653589793238462643383279502884;
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Regenerates the Gaussian perturbation identified by `seed`. Deterministic
// function of (seed, dim): the same pair yields the identical vector on the
// learner and on any worker.
inline std::vector<double> sample_noise(std::uint64_t seed, std::size_t dim) {
  if (dim == 0) {
    throw std::invalid_argument("sample_noise: dim must be >= 1");
  }
  Rng rng(seed);
  std::vector<double> eps(dim);
  for (double& e : eps) e = rng.normal();
  return eps;
}

// Collision-free seed for the `counter`-th perturbation of worker
// `worker_id`: the input words are disjoint for counter < 2^32 and mix64 is
// bijective, so no coordination between workers is needed.
inline std::uint64_t worker_seed(std::uint32_t worker_id,
                                 std::uint64_t counter) noexcept {
  return mix64((static_cast<std::uint64_t>(worker_id) << 32) ^
               (counter & 0xffffffffull) ^ 0xd1b54a32d192ed03ull);
}

}  // namespace dfd

#endif  // DFD_RNG_HPP_
