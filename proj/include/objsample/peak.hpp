#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "objsample/classification.hpp"
#include "objsample/exec.hpp"
#include "objsample/point_cloud.hpp"

namespace objsample {

enum class Axis { X, Y, Z };

/// Point counts over uniform slices along one axis. Slice 0 starts at the
/// minimum coordinate; the maximum coordinate falls in the last slice.
struct SliceHistogram {
  Axis axis = Axis::X;
  double origin = 0.0;
  double width = 1.0;
  std::vector<std::uint32_t> counts;

  /// Slice of coordinate v, clamped to the last slice.
  std::size_t slice_of(double v) const {
    const double f = (v - origin) / width;
    const std::size_t last = counts.size() - 1;
    if (!(f > 0.0)) return 0;
    const auto i = static_cast<std::size_t>(f);
    return i > last ? last : i;
  }
};

struct PeakConfig {
  double slice_width = 0.5;  // meters
  std::uint32_t stride = 8;  // slices per search window
  double peak_ratio = 1.5;   // window max must reach ratio * window mean
  std::uint32_t min_count = 20;
  bool z_filter = true;
  double z_bin_width = 0.2;  // meters

  void validate() const;
};

std::string peak_config_to_json(const PeakConfig& cfg);
/// Keys absent from the document keep their defaults.
PeakConfig peak_config_from_json(const std::string& text);

/// Throws EmptyCloud.
SliceHistogram build_histogram(const PointCloud& cloud, Axis axis, double width,
                               Exec exec = Exec::parallel);

/// One candidate per disjoint window of `cfg.stride` slices (the window's
/// first maximum); kept when it clears both min_count and peak_ratio * mean.
/// Returned sorted ascending.
std::vector<std::size_t> find_local_peaks(const SliceHistogram& hist, const PeakConfig& cfg);

/// Marks the points in the single most populated Z bin (lowest bin on ties).
std::vector<std::uint8_t> z_ground_filter(const PointCloud& cloud, double z_bin_width,
                                          Exec exec = Exec::parallel);

/// Object iff the point's X slice and Y slice are both peaks and, when the
/// Z filter is on, the point is not in the ground bin.
PointClassification classify_density_peak(const PointCloud& cloud, const PeakConfig& cfg,
                                          Exec exec = Exec::parallel);

}  // namespace objsample
