#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace fndet::nn {

// Deterministic random source. All sampling is derived from raw mt19937_64
// output (which the standard pins down bit-exactly) instead of the standard
// distributions, whose algorithms vary between library implementations.
// Identical seeds therefore give identical streams on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform double in [0, 1), 53 bits of randomness.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n), n > 0. Rejection sampling on the top range.
  std::uint64_t uniform_int(std::uint64_t n);

  // Standard normal via Box-Muller; caches the second variate of each pair.
  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Fisher-Yates with explicit index draws.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Derives an independent stream from this seed and a salt without
  // consuming state from this generator.
  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt);

 private:
  std::mt19937_64 engine_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace fndet::nn
