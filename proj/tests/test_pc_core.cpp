#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numbers>

#include "objsample/errors.hpp"
#include "objsample/labels.hpp"
#include "objsample/point_cloud.hpp"
#include "objsample/rng.hpp"
#include "objsample/synth.hpp"

using namespace objsample;

namespace {

std::vector<std::byte> encode(std::initializer_list<float> values) {
  std::vector<std::byte> out;
  for (float v : values) {
    std::uint32_t u;
    std::memcpy(&u, &v, 4);
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::byte>((u >> (8 * b)) & 0xff));
  }
  return out;
}

PointCloud random_cloud(std::size_t n, std::uint64_t seed, FormatTag tag) {
  Rng rng(seed);
  PointCloud c;
  c.format_tag = tag;
  for (std::size_t i = 0; i < n; ++i) {
    Point p;
    p.x = static_cast<float>(rng.uniform(-50, 50));
    p.y = static_cast<float>(rng.uniform(-50, 50));
    p.z = static_cast<float>(rng.uniform(-3, 3));
    p.intensity = static_cast<float>(rng.uniform());
    if (tag == FormatTag::nuscenes5) p.ring = static_cast<float>(rng.below(32));
    c.points.push_back(p);
  }
  return c;
}

}  // namespace

TEST_CASE("kitti4 decode keeps file order") {
  const auto bytes = encode({1, 2, 3, 0.5f, 4, 5, 6, 0.1f});
  REQUIRE(bytes.size() == 32);
  const PointCloud c = read_point_cloud(bytes, FormatTag::kitti4);
  REQUIRE(c.size() == 2);
  CHECK(c[0].x == 1.0f);
  CHECK(c[0].y == 2.0f);
  CHECK(c[0].z == 3.0f);
  CHECK(c[0].intensity == 0.5f);
  CHECK(c[1].x == 4.0f);
  CHECK(c[1].intensity == 0.1f);
  CHECK(c.format_tag == FormatTag::kitti4);
}

TEST_CASE("empty byte stream is an empty cloud") {
  CHECK(read_point_cloud({}, FormatTag::kitti4).empty());
  CHECK(read_point_cloud({}, FormatTag::nuscenes5).empty());
}

TEST_CASE("length not a multiple of the record size") {
  std::vector<std::byte> b(17);
  CHECK_THROWS_AS(read_point_cloud(b, FormatTag::kitti4), TruncatedRecord);
  std::vector<std::byte> b2(32);
  CHECK_THROWS_AS(read_point_cloud(b2, FormatTag::nuscenes5), TruncatedRecord);
}

TEST_CASE("non-finite coordinates are rejected with their index") {
  const auto bytes = encode({0, 0, 0, 0, 1, NAN, 1, 0});
  try {
    read_point_cloud(bytes, FormatTag::kitti4);
    FAIL("expected NonFinitePoint");
  } catch (const NonFinitePoint& e) {
    CHECK(e.index == 1);
  }
  CHECK_THROWS_AS(read_point_cloud(encode({INFINITY, 0, 0, 0}), FormatTag::kitti4), NonFinitePoint);
}

TEST_CASE("write sizes and ring fill") {
  PointCloud c;
  c.points = {{1, 2, 3, 0.5f, 7}, {4, 5, 6, 0.1f, 9}};
  CHECK(write_point_cloud(c, FormatTag::kitti4).size() == 32);

  c.format_tag = FormatTag::synthetic;
  const auto bytes = write_point_cloud(c, FormatTag::nuscenes5);
  REQUIRE(bytes.size() == 40);
  const PointCloud back = read_point_cloud(bytes, FormatTag::nuscenes5);
  CHECK(back[0].ring == 0.0f);
  CHECK(back[1].ring == 0.0f);
  CHECK(back.ring_index(0) == 0);
}

TEST_CASE("round trips are bit exact") {
  for (auto tag : {FormatTag::kitti4, FormatTag::nuscenes5}) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const PointCloud c = random_cloud(1 + seed * 37, seed, tag);
      const auto bytes = write_point_cloud(c, tag);
      const PointCloud back = read_point_cloud(bytes, tag);
      CHECK(back.points == c.points);
      CHECK(write_point_cloud(back, tag) == bytes);
    }
  }
}

TEST_CASE("format names") {
  CHECK(parse_format("kitti4") == FormatTag::kitti4);
  CHECK(parse_format("nuscenes5") == FormatTag::nuscenes5);
  CHECK(format_name(FormatTag::nuscenes5) == "nuscenes5");
  CHECK_THROWS_AS(parse_format("las"), InvalidConfig);
  CHECK(record_size(FormatTag::kitti4) == 16);
  CHECK(record_size(FormatTag::nuscenes5) == 20);
}

TEST_CASE("labels parse") {
  const auto l = read_labels(R"([{"center":[0,0,0],"size":[4,2,1.5],"yaw":0,"category":"car"}])");
  REQUIRE(l.size() == 1);
  CHECK(l.category[0] == Category::car);
  CHECK(l.boxes[0].dx == 4.0);
  CHECK(l.boxes[0].dz == 1.5);

  CHECK(read_labels("[]").empty());
  CHECK_THROWS_AS(read_labels(R"([{"center":[0,0,0],"size":[4,0,1.5],"yaw":0,"category":"car"}])"), InvalidBox);
  CHECK(read_labels(R"([{"center":[0,0,0],"size":[1,1,1],"yaw":0,"category":"truck"}])").category[0] ==
        Category::other);
}

TEST_CASE("label parse errors carry position") {
  try {
    read_labels("[\n{\"center\":[0,0,0],\n\"size\":[1,1,1],\n\"yaw\":0,\n\"category\":\"car\"},\n{\"center\":[0,0]}]");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.record == 1);
  }
  try {
    read_labels("[\n{\"center\":[0,0,0],\n\"size\": [1,1,");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 3);
  }
}

TEST_CASE("labels round trip") {
  SceneLabels l;
  l.add({1.25, -3.5, 0.1, 4, 2, 1.5, 0.3}, Category::car);
  l.add({-7, 2, -1, 0.6, 0.6, 1.7, -2.9}, Category::pedestrian);
  const auto back = read_labels(write_labels(l));
  CHECK(back.boxes == l.boxes);
  CHECK(back.category == l.category);
}

TEST_CASE("point_in_box examples") {
  const BoundingBox b{0, 0, 0, 4, 2, 2, 0};
  CHECK(point_in_box({0, 0, 0}, b));
  CHECK(point_in_box({2, 0, 0}, b));  // face inclusive
  CHECK_FALSE(point_in_box({2.001f, 0, 0}, b));
  CHECK_FALSE(point_in_box({0, 1.9f, 0}, b));

  BoundingBox turned = b;
  turned.yaw = std::numbers::pi / 2;
  CHECK(point_in_box({0, 1.9f, 0}, turned));
  // explicit matrix multiply: local = R(-yaw) * (p - c)
  const double c = std::cos(-turned.yaw), s = std::sin(-turned.yaw);
  const double lx = c * 0.0 - s * 1.9, ly = s * 0.0 + c * 1.9;
  CHECK(std::abs(lx) <= 2.0);
  CHECK(std::abs(ly) <= 1.0 + 1e-12);
}

TEST_CASE("point_in_box is invariant under rigid motion") {
  Rng rng(99);
  int agreements = 0, checked = 0;
  for (int t = 0; t < 2000; ++t) {
    const BoundingBox b{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-1, 1), rng.uniform(0.5, 4),
                        rng.uniform(0.5, 4), rng.uniform(0.5, 2), rng.uniform(-3.1, 3.1)};
    const Point p{static_cast<float>(rng.uniform(-8, 8)), static_cast<float>(rng.uniform(-8, 8)),
                  static_cast<float>(rng.uniform(-2, 2))};
    // local coordinates, then the same motion applied to both
    const double tx = p.x - b.cx, ty = p.y - b.cy;
    const double lx = std::cos(b.yaw) * tx + std::sin(b.yaw) * ty;
    const double ly = -std::sin(b.yaw) * tx + std::cos(b.yaw) * ty;
    const double margin = std::min({b.dx / 2 - std::abs(lx), b.dy / 2 - std::abs(ly),
                                    b.dz / 2 - std::abs(p.z - b.cz)});
    if (std::abs(margin) < 1e-3) continue;  // float rounding of the moved point decides
    const double yaw = rng.uniform(-3.1, 3.1), ox = rng.uniform(-20, 20), oy = rng.uniform(-20, 20);
    const double cy = std::cos(yaw), sy = std::sin(yaw);
    const Point q{static_cast<float>(cy * p.x - sy * p.y + ox), static_cast<float>(sy * p.x + cy * p.y + oy), p.z};
    BoundingBox moved = b;
    moved.cx = cy * b.cx - sy * b.cy + ox;
    moved.cy = sy * b.cx + cy * b.cy + oy;
    moved.yaw = b.yaw + yaw;
    ++checked;
    agreements += point_in_box(p, b) == point_in_box(q, moved) ? 1 : 0;
  }
  CHECK(checked > 1500);
  CHECK(agreements == checked);
}

TEST_CASE("object_mask") {
  PointCloud c;
  c.points = {{0, 0, 0}, {10, 0, 0}, {0, 10, 0}};
  SceneLabels l;
  CHECK(object_mask(c, l) == std::vector<std::uint8_t>{0, 0, 0});
  l.add({0, 0, 0, 1, 1, 1, 0}, Category::car);
  CHECK(object_mask(c, l) == std::vector<std::uint8_t>{1, 0, 0});
  l.add({0.2, 0, 0, 1, 1, 1, 0}, Category::car);  // overlaps the first box
  CHECK(object_mask(c, l) == std::vector<std::uint8_t>{1, 0, 0});
  l.add({10, 0, 0, 1, 1, 1, 0.5}, Category::car);
  CHECK(object_mask(c, l) == std::vector<std::uint8_t>{1, 1, 0});
}

TEST_CASE("object_mask is monotone in boxes") {
  const SynthScene s = synth_scene(SynthConfig::desk(), 3);
  SceneLabels partial;
  auto prev = object_mask(s.cloud, partial);
  for (std::size_t b = 0; b < s.labels.size(); ++b) {
    partial.add(s.labels.boxes[b], s.labels.category[b]);
    const auto next = object_mask(s.cloud, partial);
    for (std::size_t i = 0; i < next.size(); ++i) REQUIRE(next[i] >= prev[i]);
    prev = next;
  }
}

TEST_CASE("synth scene size and determinism") {
  SynthConfig cfg = SynthConfig::desk();
  const SynthScene a = synth_scene(cfg, 7);
  const SynthScene b = synth_scene(cfg, 7);
  CHECK(a.cloud.size() == 12000);
  CHECK(a.labels.size() == 5);
  CHECK(a.cloud.format_tag == FormatTag::synthetic);
  CHECK(a.cloud.points == b.cloud.points);
  CHECK(a.labels.boxes == b.labels.boxes);
  CHECK(a.source == b.source);
  CHECK_FALSE(synth_scene(cfg, 8).cloud.points == a.cloud.points);

  cfg.object_count = 0;
  const SynthScene g = synth_scene(cfg, 7);
  CHECK(g.cloud.size() == 10000);
  CHECK(g.labels.empty());
}

TEST_CASE("synth boxes contain their clusters") {
  for (const char* name : {"desk", "standard", "sparse"}) {
    const SynthConfig cfg = SynthConfig::preset(name);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const SynthScene s = synth_scene(cfg, seed);
      std::vector<std::size_t> total(s.labels.size(), 0), inside(s.labels.size(), 0);
      for (std::size_t i = 0; i < s.cloud.size(); ++i) {
        if (s.source[i] < 0) continue;
        const auto k = static_cast<std::size_t>(s.source[i]);
        ++total[k];
        inside[k] += point_in_box(s.cloud.points[i], s.labels.boxes[k]) ? 1 : 0;
      }
      for (std::size_t k = 0; k < total.size(); ++k) CHECK(inside[k] >= 0.99 * static_cast<double>(total[k]));
    }
  }
  const SynthScene s = synth_scene(SynthConfig::desk(), 7);
  std::size_t masked = 0;
  for (auto v : object_mask(s.cloud, s.labels)) masked += v;
  CHECK(masked >= static_cast<std::size_t>(0.99 * 5 * 400));
}

TEST_CASE("synth config validation and JSON") {
  SynthConfig bad;
  bad.ground_points = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidConfig);
  bad = SynthConfig{};
  bad.ground_extent = -1;
  CHECK_THROWS_AS(synth_scene(bad, 1), InvalidConfig);
  CHECK_THROWS_AS(SynthConfig::preset("huge"), InvalidConfig);

  const SynthConfig s = SynthConfig::standard();
  const SynthConfig back = synth_config_from_json(synth_config_to_json(s));
  CHECK(synth_scene(back, 4).cloud.points == synth_scene(s, 4).cloud.points);
  CHECK(synth_scene(s, 4).cloud.size() == 18000);
}

TEST_CASE("rng draws are reproducible and in range") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) REQUIRE(a.next() == b.next());
  Rng r(5);
  for (int i = 0; i < 10000; ++i) REQUIRE(r.below(7) < 7);
  const auto pick = sample_range_without_replacement(100, 30, r);
  std::vector<std::size_t> sorted = pick;
  std::sort(sorted.begin(), sorted.end());
  CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
  CHECK(sorted.back() < 100);
  CHECK(partition_seed(11, 0) == 11);
  CHECK(partition_seed(11, 1) != partition_seed(11, 2));
}
