#include "objsample/sampler.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <json.hpp>
#include <limits>
#include <numeric>

#include "objsample/errors.hpp"
#include "objsample/rng.hpp"

namespace objsample {

using nlohmann::json;

void SampleSpec::validate() const {
  if (!(rate > 0.0) || !(rate <= 1.0)) throw InvalidConfig("rate must be in (0, 1]");
  if (!(obj_ratio >= 0.0) || !(obj_ratio <= 1.0)) throw InvalidConfig("obj_ratio must be in [0, 1]");
}

std::size_t round_half_away(double v) {
  // std::round rounds halfway cases away from zero
  return static_cast<std::size_t>(std::round(v));
}

std::size_t sample_budget(std::size_t n, double rate) {
  if (!(rate > 0.0) || !(rate <= 1.0)) throw InvalidConfig("rate must be in (0, 1]");
  return std::min(n, round_half_away(static_cast<double>(n) * rate));
}

Budget allocate_budget(std::size_t n_total, std::size_t n_obj, std::size_t n_bg, const SampleSpec& spec) {
  spec.validate();
  if (n_obj + n_bg != n_total) throw InvalidConfig("n_obj + n_bg must equal n_total");
  const std::size_t total = sample_budget(n_total, spec.rate);
  Budget b;
  b.object = std::min(round_half_away(spec.obj_ratio * static_cast<double>(total)), n_obj);
  b.background = std::min(total - b.object, n_bg);
  std::size_t residue = total - b.object - b.background;
  const std::size_t to_obj = std::min(residue, n_obj - b.object);
  b.object += to_obj;
  residue -= to_obj;
  b.background += std::min(residue, n_bg - b.background);
  return b;
}

std::vector<std::size_t> largest_remainder_quotas(std::span<const std::size_t> counts, std::size_t total) {
  unsigned __int128 sum = 0;
  for (auto c : counts) sum += c;
  if (total > sum) {
    throw InfeasibleTotal("cannot place " + std::to_string(total) + " units in groups holding " +
                          std::to_string(static_cast<unsigned long long>(sum)));
  }
  std::vector<std::size_t> quotas(counts.size(), 0);
  if (total == 0) return quotas;

  // exact integer shares: c * total = q * sum + rem
  std::vector<unsigned __int128> rem(counts.size(), 0);
  std::size_t assigned = 0;
  for (std::size_t g = 0; g < counts.size(); ++g) {
    const unsigned __int128 prod = static_cast<unsigned __int128>(counts[g]) * total;
    quotas[g] = static_cast<std::size_t>(prod / sum);
    rem[g] = prod % sum;
    assigned += quotas[g];
  }
  std::size_t left = total - assigned;
  if (left > 0) {
    std::vector<std::size_t> order(counts.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
    for (std::size_t k = 0; k < left; ++k) ++quotas[order[k]];
  }
  return quotas;
}

namespace {

SampleResult finish(std::vector<std::size_t> indices, std::string tag) {
  std::sort(indices.begin(), indices.end());
  SampleResult r;
  r.indices = std::move(indices);
  r.method_tag = std::move(tag);
  return r;
}

inline double dist2(const Point& a, const Point& b) {
  const double dx = static_cast<double>(a.x) - static_cast<double>(b.x);
  const double dy = static_cast<double>(a.y) - static_cast<double>(b.y);
  const double dz = static_cast<double>(a.z) - static_cast<double>(b.z);
  return dx * dx + dy * dy + dz * dz;
}

}  // namespace

SampleResult sample_object_aware(const PointCloud& cloud, const PointClassification& cls, const SampleSpec& spec) {
  spec.validate();
  if (cls.is_object.size() != cloud.size() || cls.region_of.size() != cloud.size()) {
    throw ClassificationMismatch("classification covers " + std::to_string(cls.is_object.size()) +
                                 " points but the cloud has " + std::to_string(cloud.size()));
  }

  std::vector<std::pair<std::uint64_t, std::size_t>> objects;  // (region key, index)
  std::vector<std::size_t> background;
  background.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cls.is_object[i]) {
      if (!cls.region_of[i]) {
        throw ClassificationMismatch("object point " + std::to_string(i) + " has no region");
      }
      objects.emplace_back(cls.region_of[i]->key(), i);
    } else {
      if (cls.region_of[i]) {
        throw ClassificationMismatch("background point " + std::to_string(i) + " carries a region");
      }
      background.push_back(i);
    }
  }
  std::sort(objects.begin(), objects.end());

  const Budget budget = allocate_budget(cloud.size(), objects.size(), background.size(), spec);

  // group boundaries in region order
  std::vector<std::size_t> starts;
  std::vector<std::size_t> counts;
  for (std::size_t k = 0; k < objects.size(); ++k) {
    if (k == 0 || objects[k].first != objects[k - 1].first) {
      starts.push_back(k);
      counts.push_back(0);
    }
    ++counts.back();
  }
  const auto quotas = largest_remainder_quotas(counts, budget.object);

  std::vector<std::size_t> chosen;
  chosen.reserve(budget.object + budget.background);
  std::vector<std::size_t> pool;
  for (std::size_t g = 0; g < counts.size(); ++g) {
    if (quotas[g] == 0) continue;
    pool.clear();
    for (std::size_t k = starts[g]; k < starts[g] + counts[g]; ++k) pool.push_back(objects[k].second);
    // region streams use ids >= 1; id 0 is the background stream
    Rng rng(partition_seed(spec.seed, objects[starts[g]].first + 1));
    const auto pick = sample_without_replacement(pool, quotas[g], rng);
    chosen.insert(chosen.end(), pick.begin(), pick.end());
  }
  {
    Rng rng(partition_seed(spec.seed, 0));
    const auto pick = sample_without_replacement(background, budget.background, rng);
    chosen.insert(chosen.end(), pick.begin(), pick.end());
  }

  SampleResult r = finish(std::move(chosen), "object_aware");
  r.n_object_selected = budget.object;
  r.n_background_selected = budget.background;
  return r;
}

SampleResult sample_random(const PointCloud& cloud, double rate, std::uint64_t seed) {
  const std::size_t k = sample_budget(cloud.size(), rate);
  Rng rng(seed);
  return finish(sample_range_without_replacement(cloud.size(), k, rng), "random");
}

std::vector<std::size_t> farthest_point_order(const PointCloud& cloud, std::span<const std::size_t> subset,
                                              std::size_t k, std::size_t start, Exec exec) {
  const std::size_t m = subset.size();
  std::vector<std::size_t> order;
  if (k == 0 || m == 0) return order;
  if (start >= m) throw InvalidConfig("FPS start is outside the subset");
  k = std::min(k, m);
  order.reserve(k);

  std::vector<double> xs(m), ys(m), zs(m);
  for (std::size_t j = 0; j < m; ++j) {
    const Point& p = cloud.points[subset[j]];
    xs[j] = p.x;
    ys[j] = p.y;
    zs[j] = p.z;
  }
  // nearest[j] < 0 marks an already selected point
  std::vector<double> nearest(m, std::numeric_limits<double>::infinity());
  std::size_t last = start;
  nearest[last] = -1.0;
  order.push_back(subset[last]);

  const long lm = static_cast<long>(m);
  const bool par = use_parallel(exec, lm);
  for (std::size_t t = 1; t < k; ++t) {
    const double ax = xs[last], ay = ys[last], az = zs[last];
    std::size_t best = m;
    double best_d = -1.0;
    if (par) {
#pragma omp parallel
      {
        std::size_t local_best = m;
        double local_d = -1.0;
#pragma omp for schedule(static) nowait
        for (long lj = 0; lj < lm; ++lj) {
          const auto j = static_cast<std::size_t>(lj);
          const double dx = xs[j] - ax, dy = ys[j] - ay, dz = zs[j] - az;
          const double d = std::min(nearest[j], dx * dx + dy * dy + dz * dz);
          nearest[j] = d;
          if (d > local_d) {
            local_d = d;
            local_best = j;
          }
        }
#pragma omp critical(objsample_fps_argmax)
        if (local_best != m && (local_d > best_d || (local_d == best_d && local_best < best))) {
          best_d = local_d;
          best = local_best;
        }
      }
    } else {
      for (std::size_t j = 0; j < m; ++j) {
        const double dx = xs[j] - ax, dy = ys[j] - ay, dz = zs[j] - az;
        const double d = std::min(nearest[j], dx * dx + dy * dy + dz * dz);
        nearest[j] = d;
        if (d > best_d) {
          best_d = d;
          best = j;
        }
      }
    }
    last = best;
    nearest[last] = -1.0;
    order.push_back(subset[last]);
  }
  return order;
}

SampleResult sample_fps(const PointCloud& cloud, double rate, std::uint64_t seed, Exec exec) {
  if (cloud.empty()) throw EmptyCloud();
  const std::size_t k = sample_budget(cloud.size(), rate);
  std::vector<std::size_t> all(cloud.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  Rng rng(seed);
  const auto start = static_cast<std::size_t>(rng.below(cloud.size()));
  return finish(farthest_point_order(cloud, all, k, start, exec), "fps");
}

SampleResult sample_grid_fps(const PointCloud& cloud, double rate, double cell, std::uint64_t seed, Exec exec) {
  if (cloud.empty()) throw EmptyCloud();
  if (!(cell > 0.0) || !std::isfinite(cell)) throw InvalidConfig("grid cell size must be > 0");
  const std::size_t k = sample_budget(cloud.size(), rate);

  struct Keyed {
    std::int64_t cx, cy;
    std::size_t index;
  };
  std::vector<Keyed> keyed(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point& p = cloud.points[i];
    keyed[i] = {static_cast<std::int64_t>(std::floor(p.x / cell)),
                static_cast<std::int64_t>(std::floor(p.y / cell)), i};
  }
  std::sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
    if (a.cx != b.cx) return a.cx < b.cx;
    if (a.cy != b.cy) return a.cy < b.cy;
    return a.index < b.index;
  });

  std::vector<std::vector<std::size_t>> cells;
  for (std::size_t i = 0; i < keyed.size(); ++i) {
    if (i == 0 || keyed[i].cx != keyed[i - 1].cx || keyed[i].cy != keyed[i - 1].cy) cells.emplace_back();
    cells.back().push_back(keyed[i].index);
  }
  std::vector<std::size_t> counts(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) counts[c] = cells[c].size();
  const auto quotas = largest_remainder_quotas(counts, k);

  std::vector<std::vector<std::size_t>> picked(cells.size());
  const long nc = static_cast<long>(cells.size());
  auto run_cell = [&](long lc) {
    const auto c = static_cast<std::size_t>(lc);
    if (quotas[c] == 0) return;
    Rng rng(partition_seed(seed, c));
    const auto start = static_cast<std::size_t>(rng.below(cells[c].size()));
    picked[c] = farthest_point_order(cloud, cells[c], quotas[c], start, Exec::serial);
  };
  if (exec == Exec::parallel && nc > 1 && max_threads() > 1) {
#pragma omp parallel for schedule(dynamic, 1)
    for (long c = 0; c < nc; ++c) run_cell(c);
  } else {
    for (long c = 0; c < nc; ++c) run_cell(c);
  }

  std::vector<std::size_t> out;
  out.reserve(k);
  for (const auto& v : picked) out.insert(out.end(), v.begin(), v.end());
  return finish(std::move(out), "grid_fps");
}

namespace {

constexpr int kOctreeMaxDepth = 12;

void octree_leaves(const PointCloud& cloud, std::vector<std::size_t> idx, std::array<double, 3> center,
                   double half, int depth, std::size_t capacity, std::vector<std::vector<std::size_t>>& leaves) {
  if (idx.size() <= capacity || depth >= kOctreeMaxDepth) {
    leaves.push_back(std::move(idx));
    return;
  }
  std::array<std::vector<std::size_t>, 8> child;
  for (std::size_t i : idx) {
    const Point& p = cloud.points[i];
    const int oct = (p.x >= center[0] ? 1 : 0) | (p.y >= center[1] ? 2 : 0) | (p.z >= center[2] ? 4 : 0);
    child[static_cast<std::size_t>(oct)].push_back(i);
  }
  idx.clear();
  idx.shrink_to_fit();
  const double h = 0.5 * half;
  for (int oct = 0; oct < 8; ++oct) {
    auto& c = child[static_cast<std::size_t>(oct)];
    if (c.empty()) continue;
    const std::array<double, 3> cc{center[0] + ((oct & 1) ? h : -h), center[1] + ((oct & 2) ? h : -h),
                                   center[2] + ((oct & 4) ? h : -h)};
    octree_leaves(cloud, std::move(c), cc, h, depth + 1, capacity, leaves);
  }
}

}  // namespace

SampleResult sample_octree(const PointCloud& cloud, double rate, std::size_t leaf_capacity, std::uint64_t seed) {
  (void)seed;
  if (cloud.empty()) throw EmptyCloud();
  if (leaf_capacity < 1) throw InvalidConfig("leaf_capacity must be >= 1");
  const std::size_t k = sample_budget(cloud.size(), rate);

  std::array<double, 3> lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                           std::numeric_limits<double>::infinity()};
  std::array<double, 3> hi{-lo[0], -lo[1], -lo[2]};
  for (const Point& p : cloud.points) {
    const std::array<double, 3> v{p.x, p.y, p.z};
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], v[a]);
      hi[a] = std::max(hi[a], v[a]);
    }
  }
  const std::array<double, 3> center{0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1]), 0.5 * (lo[2] + hi[2])};
  double half = 0.5 * std::max({hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]});
  if (!(half > 0.0)) half = 0.5;

  std::vector<std::size_t> all(cloud.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<std::vector<std::size_t>> leaves;
  octree_leaves(cloud, std::move(all), center, half, 0, leaf_capacity, leaves);

  std::vector<std::size_t> counts(leaves.size());
  for (std::size_t l = 0; l < leaves.size(); ++l) counts[l] = leaves[l].size();
  const auto quotas = largest_remainder_quotas(counts, k);

  std::vector<std::size_t> out;
  out.reserve(k);
  std::vector<std::pair<double, std::size_t>> ranked;
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    const std::size_t q = quotas[l];
    if (q == 0) continue;
    const auto& leaf = leaves[l];
    double sx = 0, sy = 0, sz = 0;
    for (std::size_t i : leaf) {
      sx += cloud.points[i].x;
      sy += cloud.points[i].y;
      sz += cloud.points[i].z;
    }
    const double inv = 1.0 / static_cast<double>(leaf.size());
    Point centroid;
    centroid.x = static_cast<float>(sx * inv);
    centroid.y = static_cast<float>(sy * inv);
    centroid.z = static_cast<float>(sz * inv);
    ranked.clear();
    for (std::size_t i : leaf) ranked.emplace_back(dist2(cloud.points[i], centroid), i);
    if (q < ranked.size()) {
      std::nth_element(ranked.begin(), ranked.begin() + static_cast<long>(q), ranked.end());
    }
    for (std::size_t t = 0; t < q; ++t) out.push_back(ranked[t].second);
  }
  return finish(std::move(out), "octree");
}

std::string sample_result_to_json(const SampleResult& r, const SampleSpec& spec, const std::string& extra_json) {
  json j;
  if (!extra_json.empty()) j = json::parse(extra_json);
  j["method"] = r.method_tag;
  j["rate"] = spec.rate;
  j["obj_ratio"] = spec.obj_ratio;
  j["seed"] = spec.seed;
  j["n_selected"] = r.indices.size();
  j["n_object_selected"] = r.n_object_selected;
  j["n_background_selected"] = r.n_background_selected;
  j["indices"] = r.indices;
  return j.dump(1) + "\n";
}

}  // namespace objsample
