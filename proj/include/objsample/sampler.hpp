#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "objsample/classification.hpp"
#include "objsample/exec.hpp"
#include "objsample/point_cloud.hpp"

namespace objsample {

struct SampleSpec {
  double rate = 0.3;       // fraction of points kept, (0, 1]
  double obj_ratio = 0.7;  // share of the budget reserved for object points
  std::uint64_t seed = 0;

  void validate() const;
};

struct SampleResult {
  std::vector<std::size_t> indices;  // sorted, unique
  std::size_t n_object_selected = 0;
  std::size_t n_background_selected = 0;
  std::string method_tag;
};

/// Round half away from zero; the one rounding rule used for budgets.
std::size_t round_half_away(double v);

/// round(n * rate), the number of points every sampler returns.
std::size_t sample_budget(std::size_t n, double rate);

struct Budget {
  std::size_t object = 0;
  std::size_t background = 0;
};

/// Splits round(n_total * rate) between the two pools: the object pool gets
/// round(obj_ratio * B) capped at n_obj, the rest goes to background capped at
/// n_bg, and any residue flows back to whichever pool has room (object first).
Budget allocate_budget(std::size_t n_total, std::size_t n_obj, std::size_t n_bg, const SampleSpec& spec);

/// Largest-remainder apportionment of `total` over `counts`; leftover units go
/// to the largest fractional remainders, ties to the lower group index.
/// Throws InfeasibleTotal when total > sum(counts).
std::vector<std::size_t> largest_remainder_quotas(std::span<const std::size_t> counts, std::size_t total);

/// Imbalanced object/background sampling. Object budget is split across
/// object regions (ordered by RegionId) and drawn uniformly inside each region
/// from its own stream; background is drawn uniformly over the whole
/// background set. Throws ClassificationMismatch.
SampleResult sample_object_aware(const PointCloud& cloud, const PointClassification& cls,
                                 const SampleSpec& spec);

SampleResult sample_random(const PointCloud& cloud, double rate, std::uint64_t seed);

/// Farthest point sampling from a seeded random start; ties go to the lowest
/// index. Throws EmptyCloud.
SampleResult sample_fps(const PointCloud& cloud, double rate, std::uint64_t seed,
                        Exec exec = Exec::parallel);

/// FPS run independently per (floor(x/cell), floor(y/cell)) cell with
/// largest-remainder quotas.
SampleResult sample_grid_fps(const PointCloud& cloud, double rate, double cell, std::uint64_t seed,
                             Exec exec = Exec::parallel);

/// Octree over the bounding cube (split above leaf_capacity, depth <= 12);
/// each leaf keeps its quota of points closest to the leaf centroid.
/// The selection is deterministic, so `seed` only tags the result.
SampleResult sample_octree(const PointCloud& cloud, double rate, std::size_t leaf_capacity,
                           std::uint64_t seed);

/// Core FPS over a subset of points (indices into the cloud); returns the
/// chosen cloud indices in selection order, starting at subset[start].
std::vector<std::size_t> farthest_point_order(const PointCloud& cloud, std::span<const std::size_t> subset,
                                              std::size_t k, std::size_t start, Exec exec = Exec::parallel);

/// JSON record of a sampling run. `extra_json`, when non-empty, is a JSON
/// object merged in (config echo, tool version).
std::string sample_result_to_json(const SampleResult& result, const SampleSpec& spec,
                                  const std::string& extra_json = {});

}  // namespace objsample
