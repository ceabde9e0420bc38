#include "objsample/rng.hpp"

#include <numeric>
#include <utility>

namespace objsample {

namespace {

void partial_shuffle(std::vector<std::size_t>& v, std::size_t k, Rng& rng) {
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(v[i], v[j]);
  }
  v.resize(k);
}

}  // namespace

std::vector<std::size_t> sample_without_replacement(std::span<const std::size_t> pool, std::size_t k,
                                                    Rng& rng) {
  std::vector<std::size_t> v(pool.begin(), pool.end());
  if (k > v.size()) k = v.size();
  partial_shuffle(v, k, rng);
  return v;
}

std::vector<std::size_t> sample_range_without_replacement(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  if (k > n) k = n;
  partial_shuffle(v, k, rng);
  return v;
}

}  // namespace objsample
