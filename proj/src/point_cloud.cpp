#include "objsample/point_cloud.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include "objsample/errors.hpp"
#include "objsample/io.hpp"

namespace objsample {

namespace {

float load_f32le(const std::byte* p) {
  std::uint32_t bits = 0;
  for (int i = 3; i >= 0; --i) bits = (bits << 8) | std::to_integer<std::uint32_t>(p[i]);
  return std::bit_cast<float>(bits);
}

void store_f32le(std::byte* p, float v) {
  auto bits = std::bit_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) {
    p[i] = static_cast<std::byte>(bits & 0xffu);
    bits >>= 8;
  }
}

}  // namespace

std::string_view format_name(FormatTag tag) {
  switch (tag) {
    case FormatTag::kitti4: return "kitti4";
    case FormatTag::nuscenes5: return "nuscenes5";
    case FormatTag::synthetic: return "synthetic";
  }
  return "unknown";
}

FormatTag parse_format(std::string_view name) {
  if (name == "kitti4") return FormatTag::kitti4;
  if (name == "nuscenes5") return FormatTag::nuscenes5;
  if (name == "synthetic") return FormatTag::synthetic;
  throw InvalidConfig("unknown point cloud format '" + std::string(name) + "'");
}

std::size_t record_size(FormatTag tag) {
  switch (tag) {
    case FormatTag::kitti4: return 16;
    case FormatTag::nuscenes5: return 20;
    case FormatTag::synthetic: break;
  }
  throw InvalidConfig("synthetic clouds have no binary layout; write them as kitti4 or nuscenes5");
}

std::optional<int> PointCloud::ring_index(std::size_t i) const {
  if (format_tag != FormatTag::nuscenes5) return std::nullopt;
  return static_cast<int>(points[i].ring);
}

PointCloud read_point_cloud(std::span<const std::byte> bytes, FormatTag format) {
  const std::size_t rec = record_size(format);
  if (bytes.size() % rec != 0) throw TruncatedRecord(bytes.size(), rec);

  PointCloud cloud;
  cloud.format_tag = format;
  const std::size_t n = bytes.size() / rec;
  cloud.points.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::byte* p = bytes.data() + i * rec;
    Point& pt = cloud.points[i];
    pt.x = load_f32le(p);
    pt.y = load_f32le(p + 4);
    pt.z = load_f32le(p + 8);
    pt.intensity = load_f32le(p + 12);
    if (format == FormatTag::nuscenes5) pt.ring = load_f32le(p + 16);
    if (!std::isfinite(pt.x) || !std::isfinite(pt.y) || !std::isfinite(pt.z)) {
      throw NonFinitePoint(i);
    }
  }
  return cloud;
}

std::vector<std::byte> write_point_cloud(const PointCloud& cloud, FormatTag format) {
  const std::size_t rec = record_size(format);
  const bool has_ring = cloud.format_tag == FormatTag::nuscenes5;
  std::vector<std::byte> out(cloud.size() * rec);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    std::byte* p = out.data() + i * rec;
    const Point& pt = cloud.points[i];
    store_f32le(p, pt.x);
    store_f32le(p + 4, pt.y);
    store_f32le(p + 8, pt.z);
    store_f32le(p + 12, pt.intensity);
    if (format == FormatTag::nuscenes5) store_f32le(p + 16, has_ring ? pt.ring : 0.0f);
  }
  return out;
}

PointCloud read_point_cloud_file(const std::string& path, FormatTag format) {
  const auto bytes = io::read_file(path);
  return read_point_cloud(bytes, format);
}

void write_point_cloud_file(const std::string& path, const PointCloud& cloud, FormatTag format) {
  const auto bytes = write_point_cloud(cloud, format);
  io::write_file_atomic(path, bytes);
}

PointCloud select_points(const PointCloud& cloud, std::span<const std::size_t> indices) {
  PointCloud out;
  out.format_tag = cloud.format_tag;
  out.points.reserve(indices.size());
  for (std::size_t i : indices) out.points.push_back(cloud.points.at(i));
  return out;
}

}  // namespace objsample
