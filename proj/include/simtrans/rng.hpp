#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace simtrans {

// splitmix64; used to derive independent stream seeds from (run seed, index).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Deterministic RNG wrapper. std::mt19937_64 output is pinned by the standard,
// but the std distributions are not; the draw methods below are spelled out so
// streams are identical on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next() { return gen_(); }

  // Uniform in [0, 1): 53-bit mantissa construction.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Modulo bias is negligible for n << 2^64 and
  // irrelevant here; what matters is the identical stream everywhere.
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : gen_() % n; }

  bool bernoulli(double p) { return uniform() < p; }

  // In-place Fisher-Yates.
  template <class T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace simtrans
