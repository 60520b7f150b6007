// Copyright 2026 The superpol Authors.
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

#include <cstddef>
#include <cstdint>
#include <iterator>
#include <optional>
#include <random>
#include <utility>

namespace superpol {

// Derives an independent stream seed from (seed, stream) with splitmix64.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// Deterministic random source. The engine is std::mt19937_64, whose output
// sequence is fixed by the standard; the transforms below are written out so
// that sampled datasets are identical across standard library vendors.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Box-Muller; the second variate is cached.
  double normal(double mean = 0.0, double sd = 1.0);
  bool bernoulli(double p) { return uniform() < p; }
  // Uniform integer in [0, n) by rejection.
  std::size_t below(std::size_t n);
  // Draws an index from a discrete distribution given by probabilities.
  template <class Container>
  std::size_t categorical(const Container& probs);

  template <class It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::size_t>(std::distance(first, last));
    for (std::size_t i = n; i > 1; --i) {
      std::size_t j = below(i);
      std::swap(*(first + static_cast<std::ptrdiff_t>(i - 1)),
                *(first + static_cast<std::ptrdiff_t>(j)));
    }
  }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

template <class Container>
std::size_t Rng::categorical(const Container& probs) {
  double u = uniform();
  std::size_t last = 0;
  std::size_t i = 0;
  for (double p : probs) {
    if (p > 0.0) last = i;
    if (u < p) return i;
    u -= p;
    ++i;
  }
  return last;
}

}  // namespace superpol
