#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace rst {

// Deterministic RNG used everywhere randomness is needed. std::mt19937_64 has
// a standardized output sequence, and all derived draws below avoid
// std::uniform_*_distribution (whose output is implementation-defined), so
// corpora, parameter inits and shuffles are byte-identical across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 bits of precision.
  double next_double() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n). Modulo bias is negligible for the small n
  // used here and keeps the draw platform-stable.
  std::uint64_t next_below(std::uint64_t n) { return gen_() % n; }

  int next_int(int lo, int hi) {  // inclusive range [lo, hi]
    return lo + static_cast<int>(next_below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  bool next_bernoulli(double p) { return next_double() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = next_below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  // Stable way to derive independent streams (per document, per epoch, ...).
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace rst
