#include "objsample/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <json.hpp>

#include "objsample/errors.hpp"

namespace objsample {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Grid and buckets

void GridConfig::validate() const {
  if (!(x_min < x_max) || !std::isfinite(x_min) || !std::isfinite(x_max)) {
    throw InvalidConfig("grid needs x_min < x_max");
  }
  if (!(y_min < y_max) || !std::isfinite(y_min) || !std::isfinite(y_max)) {
    throw InvalidConfig("grid needs y_min < y_max");
  }
  if (m < 1 || n < 1) throw InvalidConfig("grid needs m >= 1 and n >= 1");
}

namespace {

inline std::optional<std::uint32_t> slice_in(double v, double lo, double hi, std::uint32_t count) {
  if (!(v >= lo) || !(v <= hi)) return std::nullopt;
  const double f = std::floor((v - lo) * count / (hi - lo));
  const auto s = static_cast<std::uint32_t>(f);
  return s >= count ? count - 1 : s;
}

}  // namespace

std::optional<std::uint32_t> GridConfig::x_slice(double v) const { return slice_in(v, x_min, x_max, m); }
std::optional<std::uint32_t> GridConfig::y_slice(double v) const { return slice_in(v, y_min, y_max, n); }

BucketScheme BucketScheme::power_of_two(std::uint32_t count) {
  if (count < 1 || count > 32) throw InvalidConfig("bucket count must be in [1, 32]");
  BucketScheme b;
  for (std::uint32_t k = 0; k < count; ++k) {
    b.edges.push_back(static_cast<std::uint32_t>((std::uint64_t{1} << k) - 1));
  }
  return b;
}

std::size_t BucketScheme::bucket(std::uint32_t count) const {
  const auto it = std::upper_bound(edges.begin(), edges.end(), count);
  return static_cast<std::size_t>(it - edges.begin()) - 1;
}

void BucketScheme::validate() const {
  if (edges.empty() || edges.front() != 0) throw InvalidConfig("bucket edges must start at 0");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (edges[i] <= edges[i - 1]) throw InvalidConfig("bucket edges must be strictly increasing");
  }
}

// ---------------------------------------------------------------------------
// Model storage

BayesModel BayesModel::empty(const GridConfig& grid, const BucketScheme& buckets, double alpha,
                             std::uint32_t tau) {
  grid.validate();
  buckets.validate();
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidConfig("laplace alpha must be > 0");
  if (tau < 1) throw InvalidConfig("tau must be >= 1");
  BayesModel m;
  m.grid = grid;
  m.buckets = buckets;
  m.laplace_alpha = alpha;
  m.tau = tau;
  const std::size_t r = grid.region_count();
  const std::size_t rb = r * buckets.size();
  m.prior_pos.assign(r, 0);
  m.prior_neg.assign(r, 0);
  m.lik_x_pos.assign(rb, 0);
  m.lik_x_neg.assign(rb, 0);
  m.lik_y_pos.assign(rb, 0);
  m.lik_y_neg.assign(rb, 0);
  return m;
}

void BayesModel::merge(const BayesModel& other) {
  if (!(grid == other.grid) || !(buckets == other.buckets) || laplace_alpha != other.laplace_alpha ||
      tau != other.tau) {
    throw InvalidConfig("cannot merge Bayes models with different configurations");
  }
  auto add = [](std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  };
  training_clouds += other.training_clouds;
  add(prior_pos, other.prior_pos);
  add(prior_neg, other.prior_neg);
  add(lik_x_pos, other.lik_x_pos);
  add(lik_x_neg, other.lik_x_neg);
  add(lik_y_pos, other.lik_y_pos);
  add(lik_y_neg, other.lik_y_neg);
}

// ---------------------------------------------------------------------------
// Features and labels

namespace {

constexpr std::int64_t kNoRegion = -1;

// Flat region per point, kNoRegion outside the grid.
std::vector<std::int64_t> flat_regions(const PointCloud& cloud, const GridConfig& grid, Exec exec) {
  const long n = static_cast<long>(cloud.size());
  std::vector<std::int64_t> out(cloud.size(), kNoRegion);
  auto body = [&](long li) {
    const auto i = static_cast<std::size_t>(li);
    const Point& p = cloud.points[i];
    const auto sx = grid.x_slice(p.x);
    if (!sx) return;
    const auto sy = grid.y_slice(p.y);
    if (!sy) return;
    out[i] = static_cast<std::int64_t>(grid.flat({*sx, *sy}));
  };
  if (use_parallel(exec, n)) {
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) body(i);
  } else {
    for (long i = 0; i < n; ++i) body(i);
  }
  return out;
}

RegionFeatures features_from(const std::vector<std::int64_t>& flat, const GridConfig& grid, Exec exec) {
  RegionFeatures f;
  f.d_x.assign(grid.m, 0);
  f.d_y.assign(grid.n, 0);
  const long n = static_cast<long>(flat.size());
  if (use_parallel(exec, n)) {
#pragma omp parallel
    {
      std::vector<std::uint32_t> lx(grid.m, 0), ly(grid.n, 0);
#pragma omp for schedule(static) nowait
      for (long i = 0; i < n; ++i) {
        const auto r = flat[static_cast<std::size_t>(i)];
        if (r == kNoRegion) continue;
        ++lx[static_cast<std::size_t>(r) / grid.n];
        ++ly[static_cast<std::size_t>(r) % grid.n];
      }
#pragma omp critical(objsample_features_merge)
      {
        for (std::size_t k = 0; k < grid.m; ++k) f.d_x[k] += lx[k];
        for (std::size_t k = 0; k < grid.n; ++k) f.d_y[k] += ly[k];
      }
    }
  } else {
    for (auto r : flat) {
      if (r == kNoRegion) continue;
      ++f.d_x[static_cast<std::size_t>(r) / grid.n];
      ++f.d_y[static_cast<std::size_t>(r) % grid.n];
    }
  }
  return f;
}

std::vector<std::uint8_t> labels_from(const std::vector<std::int64_t>& flat, const PointCloud& cloud,
                                      const SceneLabels& labels, const GridConfig& grid, std::uint32_t tau,
                                      Exec exec) {
  std::vector<std::uint8_t> positive(grid.region_count(), 0);
  if (labels.empty()) return positive;
  const auto inside = object_mask(cloud, labels, exec);
  std::vector<std::uint32_t> in_box(grid.region_count(), 0);
  for (std::size_t i = 0; i < flat.size(); ++i) {
    if (inside[i] && flat[i] != kNoRegion) ++in_box[static_cast<std::size_t>(flat[i])];
  }
  for (std::size_t r = 0; r < positive.size(); ++r) positive[r] = in_box[r] >= tau ? 1 : 0;
  return positive;
}

void tally(BayesModel& model, const LabeledCloud& lc, Exec exec) {
  const GridConfig& grid = model.grid;
  const auto flat = flat_regions(lc.cloud, grid, exec);
  const auto feats = features_from(flat, grid, exec);
  const auto positive = labels_from(flat, lc.cloud, lc.labels, grid, model.tau, exec);
  const std::size_t nb = model.buckets.size();

  std::vector<std::size_t> bx(grid.m), by(grid.n);
  for (std::size_t i = 0; i < grid.m; ++i) bx[i] = model.buckets.bucket(feats.d_x[i]);
  for (std::size_t j = 0; j < grid.n; ++j) by[j] = model.buckets.bucket(feats.d_y[j]);

  for (std::size_t i = 0; i < grid.m; ++i) {
    for (std::size_t j = 0; j < grid.n; ++j) {
      const std::size_t r = i * grid.n + j;
      if (positive[r]) {
        ++model.prior_pos[r];
        ++model.lik_x_pos[r * nb + bx[i]];
        ++model.lik_y_pos[r * nb + by[j]];
      } else {
        ++model.prior_neg[r];
        ++model.lik_x_neg[r * nb + bx[i]];
        ++model.lik_y_neg[r * nb + by[j]];
      }
    }
  }
  ++model.training_clouds;
}

}  // namespace

std::vector<std::optional<RegionId>> assign_regions(const PointCloud& cloud, const GridConfig& grid,
                                                    Exec exec) {
  grid.validate();
  const auto flat = flat_regions(cloud, grid, exec);
  std::vector<std::optional<RegionId>> out(flat.size());
  for (std::size_t i = 0; i < flat.size(); ++i) {
    if (flat[i] != kNoRegion) out[i] = grid.unflat(static_cast<std::size_t>(flat[i]));
  }
  return out;
}

RegionFeatures extract_features(const PointCloud& cloud, const GridConfig& grid, Exec exec) {
  grid.validate();
  return features_from(flat_regions(cloud, grid, exec), grid, exec);
}

std::vector<std::uint8_t> label_regions(const PointCloud& cloud, const SceneLabels& labels,
                                        const GridConfig& grid, std::uint32_t tau, Exec exec) {
  grid.validate();
  if (tau < 1) throw InvalidConfig("tau must be >= 1");
  return labels_from(flat_regions(cloud, grid, exec), cloud, labels, grid, tau, exec);
}

BayesModel train_bayes(std::span<const LabeledCloud> training, const GridConfig& grid,
                       const BucketScheme& buckets, std::uint32_t tau, double alpha, Exec exec) {
  if (training.empty()) throw EmptyTrainingSet();
  BayesModel model = BayesModel::empty(grid, buckets, alpha, tau);
  const long count = static_cast<long>(training.size());
  if (exec == Exec::parallel && count > 1 && max_threads() > 1) {
#pragma omp parallel
    {
      BayesModel local = BayesModel::empty(grid, buckets, alpha, tau);
#pragma omp for schedule(dynamic, 1) nowait
      for (long c = 0; c < count; ++c) tally(local, training[static_cast<std::size_t>(c)], Exec::serial);
#pragma omp critical(objsample_train_merge)
      model.merge(local);
    }
  } else {
    for (const auto& lc : training) tally(model, lc, Exec::serial);
  }
  return model;
}

// ---------------------------------------------------------------------------
// Inference

double posterior_from_buckets(const BayesModel& model, std::size_t r, std::size_t bx, std::size_t by) {
  const std::size_t nb = model.buckets.size();
  const double a = model.laplace_alpha;
  const double B = static_cast<double>(nb);
  const double pos = model.prior_pos[r];
  const double neg = model.prior_neg[r];
  const double total = pos + neg;

  const double log_pos = std::log(pos + a) - std::log(total + 2.0 * a) +
                         std::log(model.lik_x_pos[r * nb + bx] + a) - std::log(pos + B * a) +
                         std::log(model.lik_y_pos[r * nb + by] + a) - std::log(pos + B * a);
  const double log_neg = std::log(neg + a) - std::log(total + 2.0 * a) +
                         std::log(model.lik_x_neg[r * nb + bx] + a) - std::log(neg + B * a) +
                         std::log(model.lik_y_neg[r * nb + by] + a) - std::log(neg + B * a);
  const double hi = std::max(log_pos, log_neg);
  const double log_evidence = hi + std::log1p(std::exp(std::min(log_pos, log_neg) - hi));
  return std::exp(log_pos - log_evidence);
}

double bucket_likelihood(const BayesModel& model, std::size_t r, int axis, bool positive, std::size_t bucket) {
  const std::size_t nb = model.buckets.size();
  const auto& tab = axis == 0 ? (positive ? model.lik_x_pos : model.lik_x_neg)
                              : (positive ? model.lik_y_pos : model.lik_y_neg);
  const double cls = positive ? model.prior_pos[r] : model.prior_neg[r];
  const double a = model.laplace_alpha;
  return (tab[r * nb + bucket] + a) / (cls + static_cast<double>(nb) * a);
}

double posterior(const BayesModel& model, RegionId region, std::uint32_t d_x, std::uint32_t d_y) {
  if (region.x >= model.grid.m || region.y >= model.grid.n) {
    throw RegionOutOfRange("region (" + std::to_string(region.x) + ", " + std::to_string(region.y) +
                           ") is outside the " + std::to_string(model.grid.m) + "x" +
                           std::to_string(model.grid.n) + " grid");
  }
  return posterior_from_buckets(model, model.grid.flat(region), model.buckets.bucket(d_x),
                                model.buckets.bucket(d_y));
}

PointClassification classify_bayes(const PointCloud& cloud, const BayesModel& model, double threshold,
                                   BayesStats* stats, Exec exec) {
  if (!(threshold > 0.0) || !(threshold <= 1.0)) throw InvalidConfig("threshold must be in (0, 1]");
  const GridConfig& grid = model.grid;
  const auto flat = flat_regions(cloud, grid, exec);
  const auto feats = features_from(flat, grid, exec);

  // 0 = unoccupied, 1 = occupied and pending, then resolved to 2 (bg) / 3 (object)
  std::vector<std::uint8_t> verdict(grid.region_count(), 0);
  std::vector<std::size_t> pending;
  BayesStats st;
  for (auto r : flat) {
    if (r == kNoRegion) continue;
    auto& v = verdict[static_cast<std::size_t>(r)];
    if (v != 0) continue;
    ++st.occupied_regions;
    if (!model.positive_seen(static_cast<std::size_t>(r))) {
      v = 2;
      ++st.coarse_skipped;
    } else {
      v = 1;
      pending.push_back(static_cast<std::size_t>(r));
    }
  }
  st.posterior_evaluations = pending.size();

  const long np = static_cast<long>(pending.size());
  auto decide = [&](long k) {
    const std::size_t r = pending[static_cast<std::size_t>(k)];
    const std::size_t bx = model.buckets.bucket(feats.d_x[r / grid.n]);
    const std::size_t by = model.buckets.bucket(feats.d_y[r % grid.n]);
    verdict[r] = posterior_from_buckets(model, r, bx, by) >= threshold ? 3 : 2;
  };
  if (exec == Exec::parallel && np >= 256 && max_threads() > 1) {
#pragma omp parallel for schedule(static)
    for (long k = 0; k < np; ++k) decide(k);
  } else {
    for (long k = 0; k < np; ++k) decide(k);
  }

  PointClassification out;
  out.is_object.assign(cloud.size(), 0);
  out.region_of.assign(cloud.size(), std::nullopt);
  const long n = static_cast<long>(cloud.size());
  auto label = [&](long li) {
    const auto i = static_cast<std::size_t>(li);
    const auto r = flat[i];
    if (r == kNoRegion || verdict[static_cast<std::size_t>(r)] != 3) return;
    out.is_object[i] = 1;
    out.region_of[i] = grid.unflat(static_cast<std::size_t>(r));
  };
  if (use_parallel(exec, n)) {
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) label(i);
  } else {
    for (long i = 0; i < n; ++i) label(i);
  }
  if (stats) *stats = st;
  return out;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

std::string hex_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double parse_hex_double(const json& j, const char* key) {
  if (!j.is_string()) throw SchemaMismatch(std::string("model field '") + key + "' must be a hex-float string");
  const std::string s = j.get<std::string>();
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw SchemaMismatch(std::string("model field '") + key + "' is not a number: " + s);
  }
  return v;
}

}  // namespace

std::string save_model(const BayesModel& m, const std::string& provenance_json) {
  json doc;
  doc["format"] = "objsample-bayes-model";
  doc["version"] = kModelFormatVersion;
  doc["grid"] = {{"x_min", hex_double(m.grid.x_min)}, {"x_max", hex_double(m.grid.x_max)},
                 {"y_min", hex_double(m.grid.y_min)}, {"y_max", hex_double(m.grid.y_max)},
                 {"m", m.grid.m},                     {"n", m.grid.n}};
  doc["bucket_edges"] = m.buckets.edges;
  doc["laplace_alpha"] = hex_double(m.laplace_alpha);
  doc["training_clouds"] = m.training_clouds;
  doc["tau"] = m.tau;
  doc["tables"] = {{"prior_pos", m.prior_pos}, {"prior_neg", m.prior_neg}, {"lik_x_pos", m.lik_x_pos},
                   {"lik_x_neg", m.lik_x_neg}, {"lik_y_pos", m.lik_y_pos}, {"lik_y_neg", m.lik_y_neg}};
  if (!provenance_json.empty()) doc["provenance"] = json::parse(provenance_json);
  return doc.dump() + "\n";
}

BayesModel load_model(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaMismatch(std::string("model document is malformed or truncated: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaMismatch("model document must be a JSON object");
  if (!doc.contains("version") || !doc["version"].is_number_integer()) {
    throw SchemaMismatch("model document has no integer 'version' field");
  }
  const auto version = doc["version"].get<long long>();
  if (version != kModelFormatVersion) {
    throw SchemaMismatch("model version " + std::to_string(version) + " is not supported (expected " +
                         std::to_string(kModelFormatVersion) + ")");
  }

  BayesModel m;
  try {
    const json& g = doc.at("grid");
    m.grid.x_min = parse_hex_double(g.at("x_min"), "grid.x_min");
    m.grid.x_max = parse_hex_double(g.at("x_max"), "grid.x_max");
    m.grid.y_min = parse_hex_double(g.at("y_min"), "grid.y_min");
    m.grid.y_max = parse_hex_double(g.at("y_max"), "grid.y_max");
    m.grid.m = g.at("m").get<std::uint32_t>();
    m.grid.n = g.at("n").get<std::uint32_t>();
    m.buckets.edges = doc.at("bucket_edges").get<std::vector<std::uint32_t>>();
    m.laplace_alpha = parse_hex_double(doc.at("laplace_alpha"), "laplace_alpha");
    m.training_clouds = doc.at("training_clouds").get<std::uint64_t>();
    m.tau = doc.at("tau").get<std::uint32_t>();
    const json& t = doc.at("tables");
    m.prior_pos = t.at("prior_pos").get<std::vector<std::uint32_t>>();
    m.prior_neg = t.at("prior_neg").get<std::vector<std::uint32_t>>();
    m.lik_x_pos = t.at("lik_x_pos").get<std::vector<std::uint32_t>>();
    m.lik_x_neg = t.at("lik_x_neg").get<std::vector<std::uint32_t>>();
    m.lik_y_pos = t.at("lik_y_pos").get<std::vector<std::uint32_t>>();
    m.lik_y_neg = t.at("lik_y_neg").get<std::vector<std::uint32_t>>();
  } catch (const json::exception& e) {
    throw SchemaMismatch(std::string("model document is missing or mistyped a field: ") + e.what());
  }

  try {
    m.grid.validate();
    m.buckets.validate();
  } catch (const InvalidConfig& e) {
    throw SchemaMismatch(std::string("model configuration is invalid: ") + e.what());
  }
  if (!(m.laplace_alpha > 0.0)) throw SchemaMismatch("model laplace_alpha must be > 0");

  const std::size_t r = m.grid.region_count();
  const std::size_t nb = m.buckets.size();
  if (m.prior_pos.size() != r || m.prior_neg.size() != r) throw SchemaMismatch("prior tables have the wrong size");
  for (const auto* tab : {&m.lik_x_pos, &m.lik_x_neg, &m.lik_y_pos, &m.lik_y_neg}) {
    if (tab->size() != r * nb) throw SchemaMismatch("likelihood tables have the wrong size");
  }
  auto row_sum = [nb](const std::vector<std::uint32_t>& tab, std::size_t region) {
    std::uint64_t s = 0;
    for (std::size_t b = 0; b < nb; ++b) s += tab[region * nb + b];
    return s;
  };
  for (std::size_t k = 0; k < r; ++k) {
    if (std::uint64_t{m.prior_pos[k]} + m.prior_neg[k] != m.training_clouds) {
      throw SchemaMismatch("region " + std::to_string(k) + " prior counts do not sum to training_clouds");
    }
    if (row_sum(m.lik_x_pos, k) != m.prior_pos[k] || row_sum(m.lik_y_pos, k) != m.prior_pos[k] ||
        row_sum(m.lik_x_neg, k) != m.prior_neg[k] || row_sum(m.lik_y_neg, k) != m.prior_neg[k]) {
      throw SchemaMismatch("region " + std::to_string(k) + " likelihood counts do not match its prior");
    }
  }
  return m;
}

}  // namespace objsample
