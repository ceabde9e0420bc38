#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "objsample/bayes.hpp"
#include "objsample/peak.hpp"
#include "objsample/sampler.hpp"

namespace objsample {

enum class Method { random, fps, grid_fps, octree, sta_peak, sta_bayes };

std::string_view method_name(Method m);
/// Throws InvalidConfig on an unknown name.
Method parse_method(std::string_view name);
bool is_object_aware(Method m);

/// Everything needed to run one sampling method on a cloud.
struct MethodSpec {
  Method method = Method::random;
  /// Row label in reports; defaults to the method name. Lets two variants of
  /// one method (Z filter on/off) share a bench run.
  std::string label;
  double obj_ratio = 0.7;
  PeakConfig peak;
  std::shared_ptr<const BayesModel> model;  // required for sta_bayes
  double threshold = 0.5;
  double cell = 10.0;
  std::size_t leaf_capacity = 64;

  std::string display_name() const;
  /// Throws InvalidConfig.
  void validate() const;
};

/// Classification + sampling, the path that bench times.
SampleResult run_method(const PointCloud& cloud, const MethodSpec& spec, double rate, std::uint64_t seed,
                        Exec exec = Exec::parallel);

/// Per-cloud seed shared by every method in one run.
std::uint64_t cloud_seed(std::uint64_t base_seed, std::size_t cloud_index);

/// Share of in-box points that survived sampling. Throws NoObjectPoints.
double object_retention(const PointCloud& cloud, const SceneLabels& labels, const SampleResult& result);

/// Share of boxes holding at least theta selected points. Throws NoBoxes.
double instance_recall(const PointCloud& cloud, const SceneLabels& labels, const SampleResult& result,
                       std::size_t theta = 5);

struct MetricsRow {
  std::string method;
  double rate = 0.0;
  double obj_ratio = 0.0;  // 0 for methods without an object budget
  std::size_t clouds = 0;
  std::optional<double> object_retention;  // absent when no cloud had in-box points
  std::optional<double> instance_recall;   // absent when no cloud had boxes
  double mean_time_s = 0.0;
  double p95_time_s = 0.0;
};

struct EvalOptions {
  std::vector<double> rates{0.3};
  std::uint64_t base_seed = 0;
  std::size_t theta = 5;
  std::size_t repetitions = 3;  // bench only, >= 3
  int jobs = 1;                 // eval only; bench timing is always single-threaded
};

/// Metrics only (times left at 0). Clouds are spread over `jobs` workers;
/// results do not depend on the worker count.
std::vector<MetricsRow> evaluate(std::span<const MethodSpec> methods, std::span<const LabeledCloud> corpus,
                                 const EvalOptions& opts);

/// Metrics plus per-cloud latency. Each (method, rate) cell runs alone and
/// single-threaded: one discarded warm-up pass, then `repetitions` timed
/// passes over the corpus. Rows sorted by (method, rate, obj_ratio).
std::vector<MetricsRow> bench(std::span<const MethodSpec> methods, std::span<const LabeledCloud> corpus,
                              const EvalOptions& opts);

/// Nearest-rank percentile of a non-empty sample, p in (0, 100].
double percentile(std::vector<double> values, double p);

inline constexpr std::string_view kCsvHeader =
    "method,rate,obj_ratio,clouds,object_retention,instance_recall,mean_time_s,p95_time_s";

/// Throws EmptyInput.
std::string emit_csv(std::span<const MetricsRow> rows);
/// Throws ParseError.
std::vector<MetricsRow> parse_csv(std::string_view text);

/// Stated at the top of every report.
inline constexpr std::string_view kReportDisclaimer =
    "object retention and instance recall are desk-scale proxies; they are not detector mAP and are not "
    "comparable to published mAP figures";

/// Plain-text report: disclaimer, then the best method per rate by retention.
/// Throws EmptyInput.
std::string emit_summary(std::span<const MetricsRow> rows);

struct ExpectationResult {
  std::string name;
  bool acceptance = false;
  bool passed = false;
  std::string detail;
};

/// Checks a JSON expectations document against rows:
///   {"expectations": [{"name": "...", "acceptance": true,
///     "lhs": {"method": "sta_peak", "rate": 0.3, "metric": "mean_time_s"},
///     "op": "<",
///     "rhs": {"method": "fps", "rate": 0.3, "metric": "mean_time_s", "factor": 0.1}}]}
/// `rhs` may also be a plain number; "obj_ratio" optionally narrows a row
/// selector. A selector that matches no row fails the expectation.
/// Throws InvalidConfig on a malformed document.
std::vector<ExpectationResult> check_expectations(std::span<const MetricsRow> rows, const std::string& json_text);

}  // namespace objsample
