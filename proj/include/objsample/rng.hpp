#pragma once

#include <cstddef>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace objsample {

/// SplitMix64 finalizer. Used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Seed for partition `id` of a draw seeded with `seed`. Partition 0 reuses
/// the caller's seed, so a single-partition run matches the unpartitioned one.
constexpr std::uint64_t partition_seed(std::uint64_t seed, std::uint64_t id) {
  return id == 0 ? seed : mix64(seed ^ mix64(id));
}

/// Seeded generator with platform-independent output: std::mt19937_64's
/// sequence is fixed by the standard, and bounded draws use our own rejection
/// step instead of std::uniform_int_distribution (implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, bound). bound must be > 0.
  /// Multiply-shift with rejection (Lemire), exactly uniform.
  std::uint64_t below(std::uint64_t bound) {
    unsigned __int128 m = static_cast<unsigned __int128>(engine_()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;  // 2^64 mod bound
      while (low < threshold) {
        m = static_cast<unsigned __int128>(engine_()) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Marsaglia's polar method.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Draws k distinct elements of `pool` uniformly (partial Fisher-Yates on a
/// copy). The result is in draw order, not sorted.
std::vector<std::size_t> sample_without_replacement(std::span<const std::size_t> pool, std::size_t k,
                                                    Rng& rng);

/// Same, drawing from the implicit pool [0, n).
std::vector<std::size_t> sample_range_without_replacement(std::size_t n, std::size_t k, Rng& rng);

}  // namespace objsample
