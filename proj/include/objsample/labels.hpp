#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "objsample/exec.hpp"
#include "objsample/point_cloud.hpp"

namespace objsample {

/// Oriented box in the LiDAR frame: center, full extents, yaw about +Z.
struct BoundingBox {
  double cx = 0.0, cy = 0.0, cz = 0.0;
  double dx = 1.0, dy = 1.0, dz = 1.0;
  double yaw = 0.0;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

enum class Category { car, pedestrian, cyclist, other };

std::string_view category_name(Category c);
/// Unknown names map to Category::other.
Category parse_category(std::string_view name);

struct SceneLabels {
  std::vector<BoundingBox> boxes;
  std::vector<Category> category;  // parallel to boxes

  std::size_t size() const { return boxes.size(); }
  bool empty() const { return boxes.empty(); }
  void add(const BoundingBox& box, Category cat) {
    boxes.push_back(box);
    category.push_back(cat);
  }
};

/// Throws InvalidBox unless all extents are strictly positive and finite.
void validate_box(const BoundingBox& box, std::size_t record = 0);

/// Parses the JSON label document: an array of
/// {"center": [cx,cy,cz], "size": [dx,dy,dz], "yaw": y, "category": "car"}.
/// Throws ParseError (with record index and line) or InvalidBox.
SceneLabels read_labels(std::string_view text);
std::string write_labels(const SceneLabels& labels);

/// Face-inclusive containment test in the box's local frame.
bool point_in_box(const Point& p, const BoundingBox& b);

/// mask[i] is 1 iff point i lies in at least one box.
std::vector<std::uint8_t> object_mask(const PointCloud& cloud, const SceneLabels& labels,
                                      Exec exec = Exec::parallel);

}  // namespace objsample
