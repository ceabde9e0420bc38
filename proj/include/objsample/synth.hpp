#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "objsample/labels.hpp"
#include "objsample/point_cloud.hpp"

namespace objsample {

enum class Placement {
  /// Object centers uniform in [-object_extent, object_extent]^2.
  uniform,
  /// Object centers jittered around a fixed site layout (anchor points drawn
  /// once from `anchor_layout_seed`), so the same places recur across frames.
  anchored,
};

/// Desk-scale stand-in for a LiDAR sweep: a thin ground slab plus compact
/// object clusters, each with a ground-truth box.
struct SynthConfig {
  double ground_extent = 40.0;  // ground covers [-e, e]^2
  std::size_t ground_points = 10000;
  double ground_z = -1.7;
  double ground_sigma = 0.02;

  std::size_t object_count = 5;
  std::size_t object_points_min = 400;
  std::size_t object_points_max = 400;
  std::array<double, 3> object_size_min{0.3, 0.3, 1.0};
  std::array<double, 3> object_size_max{0.6, 0.6, 1.8};
  /// Gap between the ground plane and the bottom face of each box.
  double object_clearance = 0.0;

  Placement placement = Placement::uniform;
  double object_extent = 35.0;
  std::size_t anchor_count = 12;
  std::uint64_t anchor_layout_seed = 20240601;
  double anchor_jitter = 0.2;

  /// Throws InvalidConfig on non-positive counts or extents.
  void validate() const;

  /// The small scene used throughout the unit tests: 10k ground points and
  /// five 400-point clusters.
  static SynthConfig desk();
  /// 18,000-point frames (KITTI-sized) at a fixed site; the corpus used by
  /// the benchmark and the retention studies.
  static SynthConfig standard();
  /// Far-range frames: sparse ground and many small clusters that random
  /// sampling at low rates tends to miss entirely.
  static SynthConfig sparse();
  /// Looks up a preset by name ("desk", "standard", "sparse").
  static SynthConfig preset(const std::string& name);
};

struct SynthScene {
  PointCloud cloud;
  SceneLabels labels;
  /// Per point: the index of the cluster it was generated for, or -1 for
  /// ground. Generation provenance, independent of box containment.
  std::vector<int> source;
};

/// Deterministic for fixed (config, seed). Ground points come first, then
/// each cluster's points in box order.
SynthScene synth_scene(const SynthConfig& config, std::uint64_t seed);

/// JSON (de)serialization of SynthConfig, used for corpus manifests.
std::string synth_config_to_json(const SynthConfig& config);
SynthConfig synth_config_from_json(const std::string& text);

}  // namespace objsample
