#include "objsample/peak.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <limits>

#include "objsample/errors.hpp"

namespace objsample {

using nlohmann::json;

void PeakConfig::validate() const {
  if (!(slice_width > 0.0) || !std::isfinite(slice_width)) throw InvalidConfig("slice_width must be > 0");
  if (stride < 2) throw InvalidConfig("stride must be >= 2");
  if (!(peak_ratio >= 1.0)) throw InvalidConfig("peak_ratio must be >= 1");
  if (!(z_bin_width > 0.0) || !std::isfinite(z_bin_width)) throw InvalidConfig("z_bin_width must be > 0");
}

std::string peak_config_to_json(const PeakConfig& cfg) {
  const json j = {{"slice_width", cfg.slice_width}, {"stride", cfg.stride},
                  {"peak_ratio", cfg.peak_ratio},   {"min_count", cfg.min_count},
                  {"z_filter", cfg.z_filter},       {"z_bin_width", cfg.z_bin_width}};
  return j.dump(2);
}

PeakConfig peak_config_from_json(const std::string& text) {
  PeakConfig cfg;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw InvalidConfig("peak config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
      if (key == "slice_width") cfg.slice_width = value.get<double>();
      else if (key == "stride") cfg.stride = value.get<std::uint32_t>();
      else if (key == "peak_ratio") cfg.peak_ratio = value.get<double>();
      else if (key == "min_count") cfg.min_count = value.get<std::uint32_t>();
      else if (key == "z_filter") cfg.z_filter = value.get<bool>();
      else if (key == "z_bin_width") cfg.z_bin_width = value.get<double>();
      else throw InvalidConfig("unknown peak config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw InvalidConfig(std::string("peak config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

namespace {

inline float coord(const Point& p, Axis axis) {
  switch (axis) {
    case Axis::X: return p.x;
    case Axis::Y: return p.y;
    case Axis::Z: return p.z;
  }
  return p.x;
}

constexpr std::size_t kMaxSlices = std::size_t{1} << 26;

SliceHistogram empty_histogram(Axis axis, float lo, float hi, double width) {
  SliceHistogram h;
  h.axis = axis;
  h.origin = lo;
  h.width = width;
  const double span = (static_cast<double>(hi) - static_cast<double>(lo)) / width;
  if (span >= static_cast<double>(kMaxSlices)) {
    throw InvalidConfig("slice width " + std::to_string(width) + " would need more than 2^26 slices");
  }
  h.counts.assign(static_cast<std::size_t>(std::floor(span)) + 1, 0);
  return h;
}

}  // namespace

SliceHistogram build_histogram(const PointCloud& cloud, Axis axis, double width, Exec exec) {
  if (cloud.empty()) throw EmptyCloud();
  if (!(width > 0.0) || !std::isfinite(width)) throw InvalidConfig("slice width must be > 0");
  const long n = static_cast<long>(cloud.size());
  const auto& pts = cloud.points;
  const bool par = use_parallel(exec, n);

  float lo = std::numeric_limits<float>::infinity();
  float hi = -std::numeric_limits<float>::infinity();
  if (par) {
#pragma omp parallel for reduction(min : lo) reduction(max : hi) schedule(static)
    for (long i = 0; i < n; ++i) {
      const float v = coord(pts[static_cast<std::size_t>(i)], axis);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  } else {
    for (long i = 0; i < n; ++i) {
      const float v = coord(pts[static_cast<std::size_t>(i)], axis);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }

  SliceHistogram h = empty_histogram(axis, lo, hi, width);

  if (par) {
    const std::size_t bins = h.counts.size();
#pragma omp parallel
    {
      std::vector<std::uint32_t> local(bins, 0);
#pragma omp for schedule(static) nowait
      for (long i = 0; i < n; ++i) ++local[h.slice_of(coord(pts[static_cast<std::size_t>(i)], axis))];
#pragma omp critical(objsample_histogram_merge)
      for (std::size_t b = 0; b < bins; ++b) h.counts[b] += local[b];
    }
  } else {
    for (const Point& p : pts) ++h.counts[h.slice_of(coord(p, axis))];
  }
  return h;
}

std::vector<std::size_t> find_local_peaks(const SliceHistogram& hist, const PeakConfig& cfg) {
  if (cfg.stride < 1) throw InvalidConfig("stride must be >= 1");
  std::vector<std::size_t> peaks;
  const auto& c = hist.counts;
  for (std::size_t start = 0; start < c.size(); start += cfg.stride) {
    const std::size_t end = std::min(c.size(), start + cfg.stride);
    std::size_t best = start;
    std::uint64_t sum = 0;
    for (std::size_t i = start; i < end; ++i) {
      sum += c[i];
      if (c[i] > c[best]) best = i;
    }
    // count >= ratio * sum / len, kept in product form
    const double len = static_cast<double>(end - start);
    if (c[best] >= cfg.min_count && static_cast<double>(c[best]) * len >= cfg.peak_ratio * static_cast<double>(sum)) {
      peaks.push_back(best);
    }
  }
  return peaks;
}

namespace {

std::size_t ground_bin(const SliceHistogram& z) {
  return static_cast<std::size_t>(std::max_element(z.counts.begin(), z.counts.end()) - z.counts.begin());
}

}  // namespace

std::vector<std::uint8_t> z_ground_filter(const PointCloud& cloud, double z_bin_width, Exec exec) {
  const SliceHistogram z = build_histogram(cloud, Axis::Z, z_bin_width, exec);
  const std::size_t g = ground_bin(z);
  const long n = static_cast<long>(cloud.size());
  std::vector<std::uint8_t> mask(cloud.size(), 0);
  auto body = [&](long i) {
    mask[static_cast<std::size_t>(i)] = z.slice_of(cloud.points[static_cast<std::size_t>(i)].z) == g ? 1 : 0;
  };
  if (use_parallel(exec, n)) {
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) body(i);
  } else {
    for (long i = 0; i < n; ++i) body(i);
  }
  return mask;
}

PointClassification classify_density_peak(const PointCloud& cloud, const PeakConfig& cfg, Exec exec) {
  if (cloud.empty()) throw EmptyCloud();
  cfg.validate();
  SliceHistogram hx, hy, hz;
  std::vector<std::uint32_t> sx, sy, sz;  // per-point slices, serial path only
  if (use_parallel(exec, static_cast<long>(cloud.size()))) {
    hx = build_histogram(cloud, Axis::X, cfg.slice_width, exec);
    hy = build_histogram(cloud, Axis::Y, cfg.slice_width, exec);
    if (cfg.z_filter) hz = build_histogram(cloud, Axis::Z, cfg.z_bin_width, exec);
  } else {
    // same histograms as build_histogram, all axes in two passes
    constexpr float inf = std::numeric_limits<float>::infinity();
    float lo[3] = {inf, inf, inf}, hi[3] = {-inf, -inf, -inf};
    for (const Point& p : cloud.points) {
      lo[0] = std::min(lo[0], p.x);
      hi[0] = std::max(hi[0], p.x);
      lo[1] = std::min(lo[1], p.y);
      hi[1] = std::max(hi[1], p.y);
      lo[2] = std::min(lo[2], p.z);
      hi[2] = std::max(hi[2], p.z);
    }
    hx = empty_histogram(Axis::X, lo[0], hi[0], cfg.slice_width);
    hy = empty_histogram(Axis::Y, lo[1], hi[1], cfg.slice_width);
    if (cfg.z_filter) hz = empty_histogram(Axis::Z, lo[2], hi[2], cfg.z_bin_width);
    sx.resize(cloud.size());
    sy.resize(cloud.size());
    if (cfg.z_filter) sz.resize(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const Point& p = cloud.points[i];
      ++hx.counts[sx[i] = static_cast<std::uint32_t>(hx.slice_of(p.x))];
      ++hy.counts[sy[i] = static_cast<std::uint32_t>(hy.slice_of(p.y))];
      if (cfg.z_filter) ++hz.counts[sz[i] = static_cast<std::uint32_t>(hz.slice_of(p.z))];
    }
  }

  std::vector<std::uint8_t> is_peak_x(hx.counts.size(), 0);
  std::vector<std::uint8_t> is_peak_y(hy.counts.size(), 0);
  for (auto i : find_local_peaks(hx, cfg)) is_peak_x[i] = 1;
  for (auto i : find_local_peaks(hy, cfg)) is_peak_y[i] = 1;

  const std::size_t ground = cfg.z_filter ? ground_bin(hz) : 0;

  PointClassification out;
  out.is_object.assign(cloud.size(), 0);
  out.region_of.assign(cloud.size(), std::nullopt);
  const long n = static_cast<long>(cloud.size());
  auto mark = [&](std::size_t i, std::size_t x, std::size_t y) {
    out.is_object[i] = 1;
    out.region_of[i] = RegionId{static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y)};
  };
  if (use_parallel(exec, n)) {
#pragma omp parallel for schedule(static)
    for (long li = 0; li < n; ++li) {
      const auto i = static_cast<std::size_t>(li);
      const Point& p = cloud.points[i];
      const std::size_t x = hx.slice_of(p.x);
      if (!is_peak_x[x]) continue;
      const std::size_t y = hy.slice_of(p.y);
      if (!is_peak_y[y]) continue;
      if (cfg.z_filter && hz.slice_of(p.z) == ground) continue;
      mark(i, x, y);
    }
  } else {
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      if (!is_peak_x[sx[i]] || !is_peak_y[sy[i]]) continue;
      if (cfg.z_filter && sz[i] == ground) continue;
      mark(i, sx[i], sy[i]);
    }
  }
  return out;
}

}  // namespace objsample
