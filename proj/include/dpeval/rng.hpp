//
// Copyright 2026 The dpeval Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef DPEVAL_RNG_HPP_
#define DPEVAL_RNG_HPP_

#include <cstdint>
#include <random>
#include <span>

#include <Eigen/Core>

namespace dpeval {

// Versioned identifier of the sampling scheme. Anything that changes the
// stream produced for a given seed must bump this.
inline constexpr const char* kRngAlgorithm = "mt19937_64/u53-centered/as241-v1";

// Inverse of the standard normal CDF (Wichura's AS 241, PPND16). Accurate to
// about 1e-16 relative over (0, 1). Returns -inf / +inf at 0 / 1.
double inverse_normal_cdf(double p);

// Deterministic random stream. The engine is std::mt19937_64, whose output
// sequence is fixed by the standard; uniforms and normals are derived from
// raw engine words by fixed arithmetic, so a seed reproduces the same values
// on every conforming platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on the open interval (0, 1): the midpoint of one of 2^53 cells.
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double standard_normal() { return inverse_normal_cdf(uniform()); }

  double normal(double stddev) { return stddev * standard_normal(); }

  Eigen::VectorXd normal_vector(Eigen::Index size, double stddev) {
    Eigen::VectorXd out(size);
    for (Eigen::Index i = 0; i < size; ++i) out[i] = normal(stddev);
    return out;
  }

  // Index drawn from a discrete distribution given by nonnegative weights
  // summing to one. Falls back to the last positive entry if rounding leaves
  // the cumulative sum below the drawn uniform.
  std::size_t categorical(std::span<const double> probs);

 private:
  std::mt19937_64 engine_;
};

// SplitMix64 finaliser; used to derive independent child seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace dpeval

#endif  // DPEVAL_RNG_HPP_
