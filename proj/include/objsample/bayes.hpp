#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "objsample/classification.hpp"
#include "objsample/exec.hpp"
#include "objsample/labels.hpp"
#include "objsample/point_cloud.hpp"

namespace objsample {

/// Fixed m x n region grid over [x_min, x_max] x [y_min, y_max]. The same
/// grid is used for every cloud, so all clouds must share one sensor frame.
struct GridConfig {
  double x_min = -80.0, x_max = 80.0;
  double y_min = -80.0, y_max = 80.0;
  std::uint32_t m = 160;
  std::uint32_t n = 160;

  void validate() const;
  std::size_t region_count() const { return static_cast<std::size_t>(m) * n; }
  std::size_t flat(RegionId r) const { return static_cast<std::size_t>(r.x) * n + r.y; }
  RegionId unflat(std::size_t f) const {
    return {static_cast<std::uint32_t>(f / n), static_cast<std::uint32_t>(f % n)};
  }

  /// X slice of coordinate v, or empty when v is outside [x_min, x_max].
  std::optional<std::uint32_t> x_slice(double v) const;
  std::optional<std::uint32_t> y_slice(double v) const;

  friend bool operator==(const GridConfig&, const GridConfig&) = default;
};

/// Per-slice point counts (in-range points only).
struct RegionFeatures {
  std::vector<std::uint32_t> d_x;  // length m
  std::vector<std::uint32_t> d_y;  // length n
};

/// Density buckets: bucket b covers counts in [edges[b], edges[b+1]); the
/// last bucket is open-ended. edges[0] must be 0.
struct BucketScheme {
  std::vector<std::uint32_t> edges;

  /// Power-of-two buckets [2^b - 1, 2^(b+1) - 1), b = 0..count-1.
  static BucketScheme power_of_two(std::uint32_t count = 12);

  std::size_t size() const { return edges.size(); }
  std::size_t bucket(std::uint32_t count) const;
  void validate() const;

  friend bool operator==(const BucketScheme&, const BucketScheme&) = default;
};

/// m x n independent two-class Naive Bayes models over (d_x, d_y) buckets.
/// Everything is stored as integer counts; probabilities are derived on
/// demand with Laplace smoothing.
struct BayesModel {
  GridConfig grid;
  BucketScheme buckets;
  double laplace_alpha = 1.0;
  std::uint64_t training_clouds = 0;
  std::uint32_t tau = 1;  // region labeling threshold used in training

  // Indexed by flat region.
  std::vector<std::uint32_t> prior_pos;
  std::vector<std::uint32_t> prior_neg;
  // Indexed by flat region * B + bucket.
  std::vector<std::uint32_t> lik_x_pos, lik_x_neg, lik_y_pos, lik_y_neg;

  /// Empty (all-zero) tables sized for grid and buckets.
  static BayesModel empty(const GridConfig& grid, const BucketScheme& buckets, double alpha,
                          std::uint32_t tau = 1);

  bool positive_seen(std::size_t flat_region) const { return prior_pos[flat_region] > 0; }

  /// Adds another model's counts. Grids, buckets and alpha must match.
  void merge(const BayesModel& other);

  friend bool operator==(const BayesModel&, const BayesModel&) = default;
};

struct LabeledCloud {
  PointCloud cloud;
  SceneLabels labels;
};

/// Region of each point, or empty when the point is outside the grid.
std::vector<std::optional<RegionId>> assign_regions(const PointCloud& cloud, const GridConfig& grid,
                                                    Exec exec = Exec::parallel);

RegionFeatures extract_features(const PointCloud& cloud, const GridConfig& grid,
                                Exec exec = Exec::parallel);

/// label[r] is 1 iff at least tau in-box points are assigned to region r.
std::vector<std::uint8_t> label_regions(const PointCloud& cloud, const SceneLabels& labels,
                                        const GridConfig& grid, std::uint32_t tau = 1,
                                        Exec exec = Exec::parallel);

/// Counts one observation per region per training cloud. Throws
/// EmptyTrainingSet. The parallel path tallies clouds on worker threads and
/// merges by addition, which is order-independent.
BayesModel train_bayes(std::span<const LabeledCloud> training, const GridConfig& grid,
                       const BucketScheme& buckets, std::uint32_t tau = 1, double alpha = 1.0,
                       Exec exec = Exec::parallel);

/// P(object | d_x, d_y) for one region, evaluated in log space.
/// Throws RegionOutOfRange.
double posterior(const BayesModel& model, RegionId region, std::uint32_t d_x, std::uint32_t d_y);
/// Same, with the density buckets already resolved.
double posterior_from_buckets(const BayesModel& model, std::size_t flat_region, std::size_t bx,
                              std::size_t by);

/// Smoothed P(bucket | class) for one region along x (axis 0) or y (axis 1).
double bucket_likelihood(const BayesModel& model, std::size_t flat_region, int axis, bool positive,
                         std::size_t bucket);

struct BayesStats {
  std::size_t occupied_regions = 0;      // regions holding at least one point
  std::size_t coarse_skipped = 0;        // occupied regions with no positive history
  std::size_t posterior_evaluations = 0; // fine-stage model calls
};

/// Coarse stage: regions that never saw a positive are background without
/// consulting the model. Fine stage: the region's posterior is evaluated once
/// and all its points inherit the verdict (object iff posterior >= threshold).
PointClassification classify_bayes(const PointCloud& cloud, const BayesModel& model,
                                   double threshold = 0.5, BayesStats* stats = nullptr,
                                   Exec exec = Exec::parallel);

/// Versioned JSON document; every number in it is an integer or an exact
/// hex-float string, so load(save(m)) == m.
inline constexpr int kModelFormatVersion = 1;
/// `provenance_json`, when non-empty, must be a JSON object; it is stored
/// verbatim under "provenance" and ignored on load.
std::string save_model(const BayesModel& model, const std::string& provenance_json = {});
/// Throws SchemaMismatch.
BayesModel load_model(const std::string& text);

}  // namespace objsample
