#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace objsample {

/// (x-slice, y-slice) cell that an object point was detected in. Ordered by
/// x first, then y; that order is the group order used for budget splits.
struct RegionId {
  std::uint32_t x = 0;
  std::uint32_t y = 0;

  friend bool operator==(const RegionId&, const RegionId&) = default;
  friend auto operator<=>(const RegionId&, const RegionId&) = default;

  std::uint64_t key() const { return (static_cast<std::uint64_t>(x) << 32) | y; }
};

/// Per-point object/background verdict. region_of[i] is set iff is_object[i].
struct PointClassification {
  std::vector<std::uint8_t> is_object;
  std::vector<std::optional<RegionId>> region_of;

  std::size_t size() const { return is_object.size(); }
  std::size_t object_count() const;

  static PointClassification all_background(std::size_t n) {
    PointClassification c;
    c.is_object.assign(n, 0);
    c.region_of.assign(n, std::nullopt);
    return c;
  }
};

inline std::size_t PointClassification::object_count() const {
  std::size_t n = 0;
  for (auto v : is_object) n += v ? 1 : 0;
  return n;
}

}  // namespace objsample
