// Serial reference vs OpenMP kernels on 18k-point synthetic clouds.
// Run with OMP_NUM_THREADS set to the core count; arg 0 = serial, 1 = parallel.

#include <benchmark/benchmark.h>

#include "objsample/bayes.hpp"
#include "objsample/peak.hpp"
#include "objsample/sampler.hpp"
#include "objsample/synth.hpp"

using namespace objsample;

namespace {

const LabeledCloud& scene() {
  static const LabeledCloud lc = [] {
    SynthScene s = synth_scene(SynthConfig::standard(), 17);
    return LabeledCloud{std::move(s.cloud), std::move(s.labels)};
  }();
  return lc;
}

const std::vector<LabeledCloud>& training() {
  static const std::vector<LabeledCloud> data = [] {
    std::vector<LabeledCloud> out;
    for (std::uint64_t i = 0; i < 16; ++i) {
      SynthScene s = synth_scene(SynthConfig::standard(), 100 + i);
      out.push_back({std::move(s.cloud), std::move(s.labels)});
    }
    return out;
  }();
  return data;
}

const BayesModel& model() {
  static const BayesModel m = train_bayes(training(), GridConfig{}, BucketScheme::power_of_two(12));
  return m;
}

Exec exec_of(const benchmark::State& st) { return st.range(0) == 0 ? Exec::serial : Exec::parallel; }

void BM_histogram(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(build_histogram(scene().cloud, Axis::X, 0.5, exec_of(st)));
}

void BM_classify_peak(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(classify_density_peak(scene().cloud, PeakConfig{}, exec_of(st)));
}

void BM_assign_regions(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(assign_regions(scene().cloud, GridConfig{}, exec_of(st)));
}

void BM_train_bayes(benchmark::State& st) {
  for (auto _ : st) {
    benchmark::DoNotOptimize(
        train_bayes(training(), GridConfig{}, BucketScheme::power_of_two(12), 1, 1.0, exec_of(st)));
  }
}

void BM_classify_bayes(benchmark::State& st) {
  model();
  for (auto _ : st) benchmark::DoNotOptimize(classify_bayes(scene().cloud, model(), 0.5, nullptr, exec_of(st)));
}

void BM_fps(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(sample_fps(scene().cloud, 0.05, 1, exec_of(st)));
}

void BM_grid_fps(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(sample_grid_fps(scene().cloud, 0.3, 10.0, 1, exec_of(st)));
}

}  // namespace

BENCHMARK(BM_histogram)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_classify_peak)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_assign_regions)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_train_bayes)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_classify_bayes)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_fps)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_grid_fps)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
