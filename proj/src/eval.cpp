#include "objsample/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <json.hpp>
#include <map>
#include <sstream>

#include "objsample/errors.hpp"
#include "objsample/rng.hpp"

namespace objsample {

using nlohmann::json;

namespace {

constexpr std::pair<Method, std::string_view> kMethodNames[] = {
    {Method::random, "random"},     {Method::fps, "fps"},           {Method::grid_fps, "grid_fps"},
    {Method::octree, "octree"},     {Method::sta_peak, "sta_peak"}, {Method::sta_bayes, "sta_bayes"},
};

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

std::string_view method_name(Method m) {
  for (const auto& [method, name] : kMethodNames) {
    if (method == m) return name;
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (const auto& [method, n] : kMethodNames) {
    if (n == name) return method;
  }
  throw InvalidConfig("unknown method '" + std::string(name) +
                      "' (expected random, fps, grid_fps, octree, sta_peak or sta_bayes)");
}

bool is_object_aware(Method m) { return m == Method::sta_peak || m == Method::sta_bayes; }

std::string MethodSpec::display_name() const { return label.empty() ? std::string(method_name(method)) : label; }

void MethodSpec::validate() const {
  if (!(obj_ratio >= 0.0) || !(obj_ratio <= 1.0)) throw InvalidConfig("obj_ratio must be in [0, 1]");
  if (display_name().find_first_of(",\"\n") != std::string::npos) {
    throw InvalidConfig("method label may not contain commas, quotes or newlines");
  }
  switch (method) {
    case Method::sta_peak: peak.validate(); break;
    case Method::sta_bayes:
      if (!model) throw InvalidConfig("sta_bayes needs a trained model");
      if (!(threshold > 0.0) || !(threshold <= 1.0)) throw InvalidConfig("threshold must be in (0, 1]");
      break;
    case Method::grid_fps:
      if (!(cell > 0.0) || !std::isfinite(cell)) throw InvalidConfig("grid cell size must be > 0");
      break;
    case Method::octree:
      if (leaf_capacity < 1) throw InvalidConfig("leaf_capacity must be >= 1");
      break;
    default: break;
  }
}

SampleResult run_method(const PointCloud& cloud, const MethodSpec& spec, double rate, std::uint64_t seed, Exec exec) {
  switch (spec.method) {
    case Method::random: return sample_random(cloud, rate, seed);
    case Method::fps: return sample_fps(cloud, rate, seed, exec);
    case Method::grid_fps: return sample_grid_fps(cloud, rate, spec.cell, seed, exec);
    case Method::octree: return sample_octree(cloud, rate, spec.leaf_capacity, seed);
    case Method::sta_peak:
    case Method::sta_bayes: {
      PointClassification cls;
      if (spec.method == Method::sta_peak) {
        cls = classify_density_peak(cloud, spec.peak, exec);
      } else {
        if (!spec.model) throw InvalidConfig("sta_bayes needs a trained model");
        cls = classify_bayes(cloud, *spec.model, spec.threshold, nullptr, exec);
      }
      SampleResult r = sample_object_aware(cloud, cls, SampleSpec{rate, spec.obj_ratio, seed});
      r.method_tag = std::string(method_name(spec.method));
      return r;
    }
  }
  throw InvalidConfig("unhandled method");
}

std::uint64_t cloud_seed(std::uint64_t base_seed, std::size_t cloud_index) {
  return partition_seed(base_seed, static_cast<std::uint64_t>(cloud_index) + 1);
}

namespace {

/// Box membership of one labeled cloud, computed once per corpus.
struct Truth {
  std::vector<std::uint8_t> in_box;
  std::size_t in_box_count = 0;
  std::vector<std::vector<std::size_t>> box_points;
};

Truth make_truth(const PointCloud& cloud, const SceneLabels& labels) {
  Truth t;
  t.in_box.assign(cloud.size(), 0);
  t.box_points.resize(labels.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (std::size_t b = 0; b < labels.size(); ++b) {
      if (point_in_box(cloud.points[i], labels.boxes[b])) {
        t.box_points[b].push_back(i);
        t.in_box[i] = 1;
      }
    }
    t.in_box_count += t.in_box[i];
  }
  return t;
}

std::vector<std::uint8_t> selection_mask(std::size_t n, const SampleResult& r) {
  std::vector<std::uint8_t> sel(n, 0);
  for (auto i : r.indices) {
    if (i >= n) throw InvalidConfig("selected index " + std::to_string(i) + " is outside the cloud");
    sel[i] = 1;
  }
  return sel;
}

double retention_of(const Truth& t, const std::vector<std::uint8_t>& sel) {
  if (t.in_box_count == 0) throw NoObjectPoints();
  std::size_t kept = 0;
  for (std::size_t i = 0; i < sel.size(); ++i) kept += (sel[i] && t.in_box[i]) ? 1 : 0;
  return static_cast<double>(kept) / static_cast<double>(t.in_box_count);
}

double recall_of(const Truth& t, const std::vector<std::uint8_t>& sel, std::size_t theta) {
  if (t.box_points.empty()) throw NoBoxes();
  if (theta < 1) throw InvalidConfig("theta must be >= 1");
  std::size_t hit = 0;
  for (const auto& pts : t.box_points) {
    std::size_t c = 0;
    for (auto i : pts) c += sel[i];
    hit += c >= theta ? 1 : 0;
  }
  return static_cast<double>(hit) / static_cast<double>(t.box_points.size());
}

struct CloudMetrics {
  std::optional<double> retention;
  std::optional<double> recall;
};

CloudMetrics metrics_of(const Truth& t, const SampleResult& r, std::size_t n, std::size_t theta) {
  const auto sel = selection_mask(n, r);
  CloudMetrics m;
  if (t.in_box_count > 0) m.retention = retention_of(t, sel);
  if (!t.box_points.empty()) m.recall = recall_of(t, sel, theta);
  return m;
}

MetricsRow aggregate(const MethodSpec& spec, double rate, std::span<const CloudMetrics> per_cloud) {
  MetricsRow row;
  row.method = spec.display_name();
  row.rate = rate;
  row.obj_ratio = is_object_aware(spec.method) ? spec.obj_ratio : 0.0;
  row.clouds = per_cloud.size();
  double ret = 0, rec = 0;
  std::size_t n_ret = 0, n_rec = 0;
  for (const auto& m : per_cloud) {
    if (m.retention) {
      ret += *m.retention;
      ++n_ret;
    }
    if (m.recall) {
      rec += *m.recall;
      ++n_rec;
    }
  }
  if (n_ret) row.object_retention = ret / static_cast<double>(n_ret);
  if (n_rec) row.instance_recall = rec / static_cast<double>(n_rec);
  return row;
}

void check_inputs(std::span<const MethodSpec> methods, std::span<const LabeledCloud> corpus, const EvalOptions& opts) {
  if (methods.empty()) throw EmptyInput("no methods to evaluate");
  if (corpus.empty()) throw EmptyInput("corpus is empty");
  if (opts.rates.empty()) throw EmptyInput("no sampling rates given");
  for (double r : opts.rates) {
    if (!(r > 0.0) || !(r <= 1.0)) throw InvalidConfig("rate must be in (0, 1]");
  }
  for (const auto& m : methods) m.validate();
  if (opts.theta < 1) throw InvalidConfig("theta must be >= 1");
}

std::vector<Truth> corpus_truth(std::span<const LabeledCloud> corpus, int jobs) {
  std::vector<Truth> truth(corpus.size());
  const long n = static_cast<long>(corpus.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(1, jobs))
  for (long i = 0; i < n; ++i) {
    const auto& c = corpus[static_cast<std::size_t>(i)];
    truth[static_cast<std::size_t>(i)] = make_truth(c.cloud, c.labels);
  }
  return truth;
}

void sort_rows(std::vector<MetricsRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const MetricsRow& a, const MetricsRow& b) {
    if (a.method != b.method) return a.method < b.method;
    if (a.rate != b.rate) return a.rate < b.rate;
    return a.obj_ratio < b.obj_ratio;
  });
}

}  // namespace

double object_retention(const PointCloud& cloud, const SceneLabels& labels, const SampleResult& result) {
  return retention_of(make_truth(cloud, labels), selection_mask(cloud.size(), result));
}

double instance_recall(const PointCloud& cloud, const SceneLabels& labels, const SampleResult& result,
                       std::size_t theta) {
  if (labels.empty()) throw NoBoxes();
  return recall_of(make_truth(cloud, labels), selection_mask(cloud.size(), result), theta);
}

std::vector<MetricsRow> evaluate(std::span<const MethodSpec> methods, std::span<const LabeledCloud> corpus,
                                 const EvalOptions& opts) {
  check_inputs(methods, corpus, opts);
  const auto truth = corpus_truth(corpus, opts.jobs);
  std::vector<MetricsRow> rows;
  for (const auto& spec : methods) {
    for (double rate : opts.rates) {
      std::vector<CloudMetrics> per(corpus.size());
      std::exception_ptr failure;
      const long n = static_cast<long>(corpus.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(1, opts.jobs))
      for (long li = 0; li < n; ++li) {
        const auto i = static_cast<std::size_t>(li);
        try {
          const auto r = run_method(corpus[i].cloud, spec, rate, cloud_seed(opts.base_seed, i), Exec::serial);
          per[i] = metrics_of(truth[i], r, corpus[i].cloud.size(), opts.theta);
        } catch (...) {
#pragma omp critical(objsample_eval_failure)
          if (!failure) failure = std::current_exception();
        }
      }
      if (failure) std::rethrow_exception(failure);
      rows.push_back(aggregate(spec, rate, per));
    }
  }
  sort_rows(rows);
  return rows;
}

std::vector<MetricsRow> bench(std::span<const MethodSpec> methods, std::span<const LabeledCloud> corpus,
                              const EvalOptions& opts) {
  check_inputs(methods, corpus, opts);
  if (opts.repetitions < 3) throw InvalidConfig("bench needs at least 3 repetitions");
  const auto truth = corpus_truth(corpus, 1);
  using clock = std::chrono::steady_clock;

  std::vector<MetricsRow> rows;
  for (const auto& spec : methods) {
    for (double rate : opts.rates) {
      // warm-up pass; its results feed the metrics
      std::vector<CloudMetrics> per(corpus.size());
      for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto r = run_method(corpus[i].cloud, spec, rate, cloud_seed(opts.base_seed, i), Exec::serial);
        per[i] = metrics_of(truth[i], r, corpus[i].cloud.size(), opts.theta);
      }
      std::vector<double> times;
      volatile std::size_t sink = 0;
      times.reserve(corpus.size() * opts.repetitions);
      for (std::size_t rep = 0; rep < opts.repetitions; ++rep) {
        for (std::size_t i = 0; i < corpus.size(); ++i) {
          const auto t0 = clock::now();
          const auto r = run_method(corpus[i].cloud, spec, rate, cloud_seed(opts.base_seed, i), Exec::serial);
          const auto t1 = clock::now();
          times.push_back(std::chrono::duration<double>(t1 - t0).count());
          sink = sink + r.indices.size();
        }
      }
      MetricsRow row = aggregate(spec, rate, per);
      double sum = 0;
      for (double t : times) sum += t;
      row.mean_time_s = sum / static_cast<double>(times.size());
      row.p95_time_s = percentile(times, 95.0);
      rows.push_back(std::move(row));
    }
  }
  sort_rows(rows);
  return rows;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw EmptyInput("percentile of an empty sample");
  if (!(p > 0.0) || !(p <= 100.0)) throw InvalidConfig("percentile must be in (0, 100]");
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(values.size())));
  return values[std::max<std::size_t>(rank, 1) - 1];
}

std::string emit_csv(std::span<const MetricsRow> rows) {
  if (rows.empty()) throw EmptyInput("no metrics rows to write");
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += r.method;
    out += ',' + fmt6(r.rate);
    out += ',' + fmt6(r.obj_ratio);
    out += ',' + std::to_string(r.clouds);
    out += ',' + (r.object_retention ? fmt6(*r.object_retention) : std::string());
    out += ',' + (r.instance_recall ? fmt6(*r.instance_recall) : std::string());
    out += ',' + fmt6(r.mean_time_s);
    out += ',' + fmt6(r.p95_time_s);
    out += '\n';
  }
  return out;
}

std::vector<MetricsRow> parse_csv(std::string_view text) {
  std::vector<MetricsRow> rows;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header_seen = false;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kCsvHeader) throw ParseError("unexpected CSV header", 0, line_no);
      header_seen = true;
      continue;
    }
    std::vector<std::string> f;
    std::size_t s = 0;
    for (;;) {
      const std::size_t c = line.find(',', s);
      f.emplace_back(line.substr(s, c == std::string_view::npos ? std::string_view::npos : c - s));
      if (c == std::string_view::npos) break;
      s = c + 1;
    }
    const std::size_t record = rows.size();
    if (f.size() != 8) throw ParseError("expected 8 fields, got " + std::to_string(f.size()), record, line_no);
    auto num = [&](const std::string& v) {
      std::size_t used = 0;
      double d = 0;
      try {
        d = std::stod(v, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != v.size()) throw ParseError("bad number '" + v + "'", record, line_no);
      return d;
    };
    MetricsRow r;
    r.method = f[0];
    r.rate = num(f[1]);
    r.obj_ratio = num(f[2]);
    r.clouds = static_cast<std::size_t>(num(f[3]));
    if (!f[4].empty()) r.object_retention = num(f[4]);
    if (!f[5].empty()) r.instance_recall = num(f[5]);
    r.mean_time_s = num(f[6]);
    r.p95_time_s = num(f[7]);
    rows.push_back(std::move(r));
  }
  if (!header_seen) throw ParseError("missing CSV header", 0, 0);
  return rows;
}

std::string emit_summary(std::span<const MetricsRow> rows) {
  if (rows.empty()) throw EmptyInput("no metrics rows to summarize");
  std::ostringstream out;
  out << "# " << kReportDisclaimer << "\n\n";
  out << "best method per rate (by object retention):\n";
  std::map<double, const MetricsRow*> best;
  for (const auto& r : rows) {
    if (!r.object_retention) continue;
    auto& b = best[r.rate];
    if (!b || *r.object_retention > *b->object_retention) b = &r;
  }
  if (best.empty()) out << "  (no row has a defined retention)\n";
  for (const auto& [rate, r] : best) {
    out << "  rate " << fmt6(rate) << ": " << r->method;
    if (r->obj_ratio > 0) out << " (obj_ratio " << fmt6(r->obj_ratio) << ")";
    out << "  retention " << fmt6(*r->object_retention);
    if (r->instance_recall) out << "  recall " << fmt6(*r->instance_recall);
    out << "\n";
  }
  out << "\nall rows:\n";
  char buf[256];
  std::snprintf(buf, sizeof buf, "  %-16s %6s %9s %6s %10s %8s %12s %12s\n", "method", "rate", "obj_ratio", "clouds",
                "retention", "recall", "mean_s", "p95_s");
  out << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "  %-16s %6s %9s %6zu %10s %8s %12s %12s\n", r.method.c_str(), fmt6(r.rate).c_str(),
                  fmt6(r.obj_ratio).c_str(), r.clouds,
                  r.object_retention ? fmt6(*r.object_retention).c_str() : "-",
                  r.instance_recall ? fmt6(*r.instance_recall).c_str() : "-", fmt6(r.mean_time_s).c_str(),
                  fmt6(r.p95_time_s).c_str());
    out << buf;
  }
  return out.str();
}

namespace {

std::optional<double> metric_of(const MetricsRow& r, const std::string& metric) {
  if (metric == "object_retention") return r.object_retention;
  if (metric == "instance_recall") return r.instance_recall;
  if (metric == "mean_time_s") return r.mean_time_s;
  if (metric == "p95_time_s") return r.p95_time_s;
  if (metric == "clouds") return static_cast<double>(r.clouds);
  throw InvalidConfig("unknown metric '" + metric + "'");
}

/// Value selected by {"method", "rate", "metric", ["obj_ratio"], ["factor"]}.
std::optional<double> select_value(std::span<const MetricsRow> rows, const json& sel, std::string& what) {
  const auto method = sel.at("method").get<std::string>();
  const double rate = sel.at("rate").get<double>();
  const auto metric = sel.at("metric").get<std::string>();
  const double factor = sel.value("factor", 1.0);
  std::optional<double> ratio;
  if (sel.contains("obj_ratio")) ratio = sel.at("obj_ratio").get<double>();
  what = method + "@" + fmt6(rate) + "." + metric;
  if (factor != 1.0) what = fmt6(factor) + "*" + what;
  for (const auto& r : rows) {
    if (r.method != method || std::abs(r.rate - rate) > 1e-9) continue;
    if (ratio && std::abs(r.obj_ratio - *ratio) > 1e-9) continue;
    auto v = metric_of(r, metric);
    if (v) *v *= factor;
    return v;
  }
  return std::nullopt;
}

bool compare(double a, const std::string& op, double b) {
  if (op == "<") return a < b;
  if (op == "<=") return a <= b;
  if (op == ">") return a > b;
  if (op == ">=") return a >= b;
  throw InvalidConfig("unknown comparison '" + op + "'");
}

}  // namespace

std::vector<ExpectationResult> check_expectations(std::span<const MetricsRow> rows, const std::string& json_text) {
  std::vector<ExpectationResult> out;
  try {
    const json doc = json::parse(json_text);
    for (const auto& e : doc.at("expectations")) {
      ExpectationResult r;
      r.name = e.value("name", std::string("expectation ") + std::to_string(out.size()));
      r.acceptance = e.value("acceptance", false);
      const auto op = e.at("op").get<std::string>();
      std::string lhs_what, rhs_what;
      const auto lhs = select_value(rows, e.at("lhs"), lhs_what);
      std::optional<double> rhs;
      if (e.at("rhs").is_number()) {
        rhs = e.at("rhs").get<double>();
        rhs_what = fmt6(*rhs);
      } else {
        rhs = select_value(rows, e.at("rhs"), rhs_what);
      }
      if (!lhs || !rhs) {
        r.passed = false;
        r.detail = "no value for " + (!lhs ? lhs_what : rhs_what);
      } else {
        r.passed = compare(*lhs, op, *rhs);
        r.detail = lhs_what + " = " + fmt6(*lhs) + " " + op + " " + rhs_what + " = " + fmt6(*rhs);
      }
      out.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw InvalidConfig(std::string("expectations: ") + e.what());
  }
  return out;
}

}  // namespace objsample
