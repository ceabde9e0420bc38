#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace objsample {

enum class FormatTag { kitti4, nuscenes5, synthetic };

std::string_view format_name(FormatTag tag);
/// Accepts "kitti4", "nuscenes5", "synthetic". Throws InvalidConfig otherwise.
FormatTag parse_format(std::string_view name);
/// Bytes per point on disk; synthetic clouds have no binary layout of their own.
std::size_t record_size(FormatTag tag);

/// One LiDAR return. Coordinates in meters, sensor frame.
///
/// `ring` holds the raw nuScenes channel field. It is kept as the float read
/// from disk so that read/write round-trips are bit-exact; it is meaningful
/// only for nuscenes5 clouds and defaults to 0 elsewhere.
struct Point {
  float x = 0.0f;
  float y = 0.0f;
  float z = 0.0f;
  float intensity = 0.0f;
  float ring = 0.0f;

  friend bool operator==(const Point&, const Point&) = default;
};

struct PointCloud {
  std::vector<Point> points;
  FormatTag format_tag = FormatTag::synthetic;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  const Point& operator[](std::size_t i) const { return points[i]; }

  /// Channel index for nuscenes5 clouds; empty for other formats.
  std::optional<int> ring_index(std::size_t i) const;
};

/// Decodes a headerless little-endian float32 record stream.
/// Throws TruncatedRecord or NonFinitePoint.
PointCloud read_point_cloud(std::span<const std::byte> bytes, FormatTag format);
std::vector<std::byte> write_point_cloud(const PointCloud& cloud, FormatTag format);

PointCloud read_point_cloud_file(const std::string& path, FormatTag format);
void write_point_cloud_file(const std::string& path, const PointCloud& cloud,
                            FormatTag format);

/// Copies the points at `indices`, in that order, into a new cloud with the
/// same format tag.
PointCloud select_points(const PointCloud& cloud, std::span<const std::size_t> indices);

}  // namespace objsample
