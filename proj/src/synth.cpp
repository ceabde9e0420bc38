#include "objsample/synth.hpp"

#include <cmath>
#include <json.hpp>
#include <numbers>

#include "objsample/errors.hpp"
#include "objsample/rng.hpp"

namespace objsample {

using nlohmann::json;

void SynthConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidConfig(std::string(name) + " must be > 0");
  };
  positive(ground_extent, "ground_extent");
  positive(object_extent, "object_extent");
  if (!(ground_sigma >= 0.0)) throw InvalidConfig("ground_sigma must be >= 0");
  if (ground_points == 0) throw InvalidConfig("ground_points must be > 0");
  if (object_count > 0) {
    if (object_points_min == 0) throw InvalidConfig("object_points_min must be > 0");
    if (object_points_max < object_points_min) {
      throw InvalidConfig("object_points_max must be >= object_points_min");
    }
    for (int k = 0; k < 3; ++k) {
      positive(object_size_min[k], "object_size_min");
      if (object_size_max[k] < object_size_min[k]) {
        throw InvalidConfig("object_size_max must be >= object_size_min");
      }
    }
  }
  if (object_clearance < 0.0) throw InvalidConfig("object_clearance must be >= 0");
  if (placement == Placement::anchored) {
    if (anchor_count < object_count) {
      throw InvalidConfig("anchored placement needs anchor_count >= object_count");
    }
    if (!(anchor_jitter >= 0.0)) throw InvalidConfig("anchor_jitter must be >= 0");
  }
}

SynthConfig SynthConfig::desk() { return SynthConfig{}; }

SynthConfig SynthConfig::standard() {
  SynthConfig c;
  c.ground_points = 14000;
  c.object_count = 5;
  c.object_points_min = 800;
  c.object_points_max = 800;
  c.object_size_min = {0.3, 0.3, 1.0};
  c.object_size_max = {0.8, 0.8, 1.8};
  c.placement = Placement::anchored;
  c.anchor_count = 12;
  return c;
}

SynthConfig SynthConfig::sparse() {
  SynthConfig c;
  c.ground_points = 4000;
  c.object_count = 15;
  c.object_points_min = 15;
  c.object_points_max = 60;
  c.object_size_min = {0.3, 0.3, 1.0};
  c.object_size_max = {0.8, 0.8, 1.8};
  c.placement = Placement::anchored;
  c.anchor_count = 30;
  return c;
}

SynthConfig SynthConfig::preset(const std::string& name) {
  if (name == "desk") return desk();
  if (name == "standard") return standard();
  if (name == "sparse") return sparse();
  throw InvalidConfig("unknown synthetic preset '" + name + "'");
}

namespace {

Category category_for(double dx, double dy) {
  const double footprint = std::max(dx, dy);
  if (footprint >= 1.5) return Category::car;
  if (footprint >= 0.7) return Category::cyclist;
  return Category::pedestrian;
}

// Standard normal clipped to [-3, 3] by rejection.
double truncated_normal(Rng& rng) {
  for (;;) {
    const double v = rng.normal();
    if (std::abs(v) <= 3.0) return v;
  }
}

}  // namespace

SynthScene synth_scene(const SynthConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  SynthScene scene;
  scene.cloud.format_tag = FormatTag::synthetic;
  auto& pts = scene.cloud.points;

  pts.reserve(cfg.ground_points + cfg.object_count * cfg.object_points_max);
  for (std::size_t i = 0; i < cfg.ground_points; ++i) {
    Point p;
    p.x = static_cast<float>(rng.uniform(-cfg.ground_extent, cfg.ground_extent));
    p.y = static_cast<float>(rng.uniform(-cfg.ground_extent, cfg.ground_extent));
    p.z = static_cast<float>(cfg.ground_z + cfg.ground_sigma * rng.normal());
    p.intensity = static_cast<float>(rng.uniform(0.05, 0.3));
    pts.push_back(p);
  }
  scene.source.assign(cfg.ground_points, -1);

  std::vector<std::size_t> anchor_pick;
  std::vector<std::array<double, 2>> anchors;
  if (cfg.placement == Placement::anchored && cfg.object_count > 0) {
    Rng layout(cfg.anchor_layout_seed);
    for (std::size_t a = 0; a < cfg.anchor_count; ++a) {
      const double ax = layout.uniform(-cfg.object_extent, cfg.object_extent);
      const double ay = layout.uniform(-cfg.object_extent, cfg.object_extent);
      anchors.push_back({ax, ay});
    }
    anchor_pick = sample_range_without_replacement(cfg.anchor_count, cfg.object_count, rng);
  }

  for (std::size_t k = 0; k < cfg.object_count; ++k) {
    const std::size_t span = cfg.object_points_max - cfg.object_points_min + 1;
    const std::size_t count = cfg.object_points_min + static_cast<std::size_t>(rng.below(span));
    BoundingBox box;
    box.dx = rng.uniform(cfg.object_size_min[0], cfg.object_size_max[0]);
    box.dy = rng.uniform(cfg.object_size_min[1], cfg.object_size_max[1]);
    box.dz = rng.uniform(cfg.object_size_min[2], cfg.object_size_max[2]);
    if (cfg.placement == Placement::anchored) {
      const auto& a = anchors[anchor_pick[k]];
      box.cx = a[0] + cfg.anchor_jitter * rng.normal();
      box.cy = a[1] + cfg.anchor_jitter * rng.normal();
    } else {
      box.cx = rng.uniform(-cfg.object_extent, cfg.object_extent);
      box.cy = rng.uniform(-cfg.object_extent, cfg.object_extent);
    }
    box.cz = cfg.ground_z + cfg.object_clearance + 0.5 * box.dz;
    box.yaw = rng.uniform(-std::numbers::pi, std::numbers::pi);
    scene.labels.add(box, category_for(box.dx, box.dy));

    const double c = std::cos(box.yaw);
    const double s = std::sin(box.yaw);
    for (std::size_t i = 0; i < count; ++i) {
      // sigma = extent / 6, clipped at 3 sigma: every point stays in the box
      const double lx = truncated_normal(rng) * box.dx / 6.0;
      const double ly = truncated_normal(rng) * box.dy / 6.0;
      const double lz = truncated_normal(rng) * box.dz / 6.0;
      Point p;
      p.x = static_cast<float>(box.cx + c * lx - s * ly);
      p.y = static_cast<float>(box.cy + s * lx + c * ly);
      p.z = static_cast<float>(box.cz + lz);
      p.intensity = static_cast<float>(rng.uniform(0.2, 0.9));
      pts.push_back(p);
      scene.source.push_back(static_cast<int>(k));
    }
  }
  return scene;
}

std::string synth_config_to_json(const SynthConfig& c) {
  json j = {
      {"ground_extent", c.ground_extent},
      {"ground_points", c.ground_points},
      {"ground_z", c.ground_z},
      {"ground_sigma", c.ground_sigma},
      {"object_count", c.object_count},
      {"object_points_min", c.object_points_min},
      {"object_points_max", c.object_points_max},
      {"object_size_min", c.object_size_min},
      {"object_size_max", c.object_size_max},
      {"object_clearance", c.object_clearance},
      {"placement", c.placement == Placement::anchored ? "anchored" : "uniform"},
      {"object_extent", c.object_extent},
      {"anchor_count", c.anchor_count},
      {"anchor_layout_seed", c.anchor_layout_seed},
      {"anchor_jitter", c.anchor_jitter},
  };
  return j.dump(2);
}

SynthConfig synth_config_from_json(const std::string& text) {
  SynthConfig c;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidConfig(std::string("synthetic config: ") + e.what());
  }
  if (!j.is_object()) throw InvalidConfig("synthetic config must be a JSON object");
  try {
    if (j.contains("preset")) c = SynthConfig::preset(j["preset"].get<std::string>());
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j[key].get<std::decay_t<decltype(field)>>();
    };
    get("ground_extent", c.ground_extent);
    get("ground_points", c.ground_points);
    get("ground_z", c.ground_z);
    get("ground_sigma", c.ground_sigma);
    get("object_count", c.object_count);
    get("object_points_min", c.object_points_min);
    get("object_points_max", c.object_points_max);
    get("object_size_min", c.object_size_min);
    get("object_size_max", c.object_size_max);
    get("object_clearance", c.object_clearance);
    get("object_extent", c.object_extent);
    get("anchor_count", c.anchor_count);
    get("anchor_layout_seed", c.anchor_layout_seed);
    get("anchor_jitter", c.anchor_jitter);
    if (j.contains("placement")) {
      const auto p = j["placement"].get<std::string>();
      if (p == "anchored") {
        c.placement = Placement::anchored;
      } else if (p == "uniform") {
        c.placement = Placement::uniform;
      } else {
        throw InvalidConfig("unknown placement '" + p + "'");
      }
    }
  } catch (const json::exception& e) {
    throw InvalidConfig(std::string("synthetic config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace objsample
