#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "mixlab/common.hpp"

namespace mixlab {

// Deterministic xoshiro256** generator. We avoid <random> distributions so
// that streams are reproducible across standard library implementations;
// sampling helpers below use unbiased rejection.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t uniform(std::uint64_t bound);

  // Uniform double in [0, 1) with 53 bits of precision.
  double uniform_double();

  bool bernoulli(double p) { return uniform_double() < p; }

  void fill(std::uint8_t* out, std::size_t len);
  Bytes bytes(std::size_t len);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t s_[4];
};

// Derives an independent stream seed from (root, tag, indices). Streams for
// distinct purposes never share state, so the number of draws consumed by one
// concern cannot perturb another.
std::uint64_t subseed(std::uint64_t root, std::string_view tag);
std::uint64_t subseed(std::uint64_t root, std::string_view tag, std::uint64_t a);
std::uint64_t subseed(std::uint64_t root, std::string_view tag, std::uint64_t a, std::uint64_t b);

}  // namespace mixlab
