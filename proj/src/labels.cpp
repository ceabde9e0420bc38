#include "objsample/labels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <json.hpp>

#include "objsample/errors.hpp"

namespace objsample {

using nlohmann::json;

std::string_view category_name(Category c) {
  switch (c) {
    case Category::car: return "car";
    case Category::pedestrian: return "pedestrian";
    case Category::cyclist: return "cyclist";
    case Category::other: return "other";
  }
  return "other";
}

Category parse_category(std::string_view name) {
  if (name == "car") return Category::car;
  if (name == "pedestrian") return Category::pedestrian;
  if (name == "cyclist") return Category::cyclist;
  return Category::other;
}

void validate_box(const BoundingBox& b, std::size_t record) {
  for (double v : {b.cx, b.cy, b.cz, b.yaw}) {
    if (!std::isfinite(v)) throw InvalidBox("box has a non-finite center or yaw", record);
  }
  for (double e : {b.dx, b.dy, b.dz}) {
    if (!(e > 0.0) || !std::isfinite(e)) {
      throw InvalidBox("box " + std::to_string(record) + " has a non-positive extent", record);
    }
  }
}

namespace {

std::size_t line_of(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(byte), '\n'));
}

std::array<double, 3> triple(const json& rec, const char* key, std::size_t index) {
  const auto it = rec.find(key);
  if (it == rec.end() || !it->is_array() || it->size() != 3) {
    throw ParseError(std::string("record ") + std::to_string(index) + ": '" + key +
                         "' must be an array of 3 numbers",
                     index);
  }
  std::array<double, 3> out{};
  for (std::size_t k = 0; k < 3; ++k) {
    if (!(*it)[k].is_number()) {
      throw ParseError(std::string("record ") + std::to_string(index) + ": '" + key +
                           "' must contain numbers",
                       index);
    }
    out[k] = (*it)[k].get<double>();
  }
  return out;
}

}  // namespace

SceneLabels read_labels(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("label document: ") + e.what(), 0, line_of(text, e.byte));
  }
  if (!doc.is_array()) throw ParseError("label document must be a JSON array", 0, 1);

  SceneLabels labels;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& rec = doc[i];
    if (!rec.is_object()) {
      throw ParseError("record " + std::to_string(i) + " is not an object", i);
    }
    const auto c = triple(rec, "center", i);
    const auto s = triple(rec, "size", i);
    BoundingBox box{c[0], c[1], c[2], s[0], s[1], s[2], 0.0};
    if (auto it = rec.find("yaw"); it != rec.end()) {
      if (!it->is_number()) throw ParseError("record " + std::to_string(i) + ": 'yaw' must be a number", i);
      box.yaw = it->get<double>();
    }
    Category cat = Category::other;
    if (auto it = rec.find("category"); it != rec.end()) {
      if (!it->is_string()) {
        throw ParseError("record " + std::to_string(i) + ": 'category' must be a string", i);
      }
      cat = parse_category(it->get<std::string>());
    }
    validate_box(box, i);
    labels.add(box, cat);
  }
  return labels;
}

std::string write_labels(const SceneLabels& labels) {
  json doc = json::array();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& b = labels.boxes[i];
    doc.push_back({{"center", {b.cx, b.cy, b.cz}},
                   {"size", {b.dx, b.dy, b.dz}},
                   {"yaw", b.yaw},
                   {"category", category_name(labels.category[i])}});
  }
  return doc.dump(1) + "\n";
}

bool point_in_box(const Point& p, const BoundingBox& b) {
  const double tx = static_cast<double>(p.x) - b.cx;
  const double ty = static_cast<double>(p.y) - b.cy;
  const double tz = static_cast<double>(p.z) - b.cz;
  const double c = std::cos(b.yaw);
  const double s = std::sin(b.yaw);
  // rotate by -yaw
  const double lx = c * tx + s * ty;
  const double ly = -s * tx + c * ty;
  return std::abs(lx) <= 0.5 * b.dx && std::abs(ly) <= 0.5 * b.dy && std::abs(tz) <= 0.5 * b.dz;
}

std::vector<std::uint8_t> object_mask(const PointCloud& cloud, const SceneLabels& labels, Exec exec) {
  const long n = static_cast<long>(cloud.size());
  std::vector<std::uint8_t> mask(cloud.size(), 0);
  if (labels.empty()) return mask;
  const auto& boxes = labels.boxes;
  auto body = [&](long i) {
    const Point& p = cloud.points[static_cast<std::size_t>(i)];
    for (const auto& b : boxes) {
      if (point_in_box(p, b)) {
        mask[static_cast<std::size_t>(i)] = 1;
        break;
      }
    }
  };
  if (use_parallel(exec, n)) {
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) body(i);
  } else {
    for (long i = 0; i < n; ++i) body(i);
  }
  return mask;
}

}  // namespace objsample
