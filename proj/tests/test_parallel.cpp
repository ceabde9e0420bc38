#include <doctest.h>

#ifdef OBJSAMPLE_HAVE_OPENMP
#include <omp.h>
#endif

#include "objsample/bayes.hpp"
#include "objsample/eval.hpp"
#include "objsample/peak.hpp"
#include "objsample/sampler.hpp"
#include "objsample/synth.hpp"

using namespace objsample;

// Each kernel's parallel path must reproduce the serial reference exactly.
// Four threads are forced so the parallel branches run even on one core.

namespace {

struct ForceThreads {
  ForceThreads() {
#ifdef OBJSAMPLE_HAVE_OPENMP
    omp_set_num_threads(4);
#endif
  }
} force_threads;

std::vector<LabeledCloud> scenes(std::uint64_t first, std::size_t count) {
  std::vector<LabeledCloud> out;
  for (std::size_t i = 0; i < count; ++i) {
    SynthScene s = synth_scene(SynthConfig::standard(), first + i);
    out.push_back({std::move(s.cloud), std::move(s.labels)});
  }
  return out;
}

bool same(const PointClassification& a, const PointClassification& b) {
  return a.is_object == b.is_object && a.region_of == b.region_of;
}

}  // namespace

TEST_CASE("openmp is exercised") {
#ifdef OBJSAMPLE_HAVE_OPENMP
  CHECK(omp_get_max_threads() >= 2);
#else
  MESSAGE("built without OpenMP; parallel paths fall back to serial");
#endif
}

TEST_CASE("peak kernels") {
  for (const auto& lc : scenes(300, 3)) {
    for (Axis a : {Axis::X, Axis::Y, Axis::Z}) {
      const auto s = build_histogram(lc.cloud, a, 0.5, Exec::serial);
      const auto p = build_histogram(lc.cloud, a, 0.5, Exec::parallel);
      CHECK(s.counts == p.counts);
      CHECK(s.origin == p.origin);
    }
    CHECK(z_ground_filter(lc.cloud, 0.2, Exec::serial) == z_ground_filter(lc.cloud, 0.2, Exec::parallel));
    PeakConfig cfg;
    CHECK(same(classify_density_peak(lc.cloud, cfg, Exec::serial), classify_density_peak(lc.cloud, cfg, Exec::parallel)));
    cfg.z_filter = false;
    CHECK(same(classify_density_peak(lc.cloud, cfg, Exec::serial), classify_density_peak(lc.cloud, cfg, Exec::parallel)));
    CHECK(object_mask(lc.cloud, lc.labels, Exec::serial) == object_mask(lc.cloud, lc.labels, Exec::parallel));
  }
}

TEST_CASE("bayes kernels") {
  const auto train = scenes(500, 12);
  const GridConfig grid;
  for (const auto& lc : scenes(600, 2)) {
    CHECK(assign_regions(lc.cloud, grid, Exec::serial) == assign_regions(lc.cloud, grid, Exec::parallel));
    const auto fs = extract_features(lc.cloud, grid, Exec::serial);
    const auto fp = extract_features(lc.cloud, grid, Exec::parallel);
    CHECK(fs.d_x == fp.d_x);
    CHECK(fs.d_y == fp.d_y);
    for (std::uint32_t tau : {1u, 4u}) {
      CHECK(label_regions(lc.cloud, lc.labels, grid, tau, Exec::serial) ==
            label_regions(lc.cloud, lc.labels, grid, tau, Exec::parallel));
    }
  }
  const auto bucket = BucketScheme::power_of_two(12);
  const BayesModel ms = train_bayes(train, grid, bucket, 1, 1.0, Exec::serial);
  const BayesModel mp = train_bayes(train, grid, bucket, 1, 1.0, Exec::parallel);
  CHECK(ms == mp);
  for (const auto& lc : scenes(700, 2)) {
    BayesStats ss, sp;
    CHECK(same(classify_bayes(lc.cloud, ms, 0.5, &ss, Exec::serial), classify_bayes(lc.cloud, ms, 0.5, &sp, Exec::parallel)));
    CHECK(ss.occupied_regions == sp.occupied_regions);
    CHECK(ss.coarse_skipped == sp.coarse_skipped);
    CHECK(ss.posterior_evaluations == sp.posterior_evaluations);
  }
}

TEST_CASE("sampler kernels") {
  const auto data = scenes(800, 2);
  for (const auto& lc : data) {
    CHECK(sample_fps(lc.cloud, 0.02, 4, Exec::serial).indices == sample_fps(lc.cloud, 0.02, 4, Exec::parallel).indices);
    CHECK(sample_grid_fps(lc.cloud, 0.3, 10.0, 4, Exec::serial).indices ==
          sample_grid_fps(lc.cloud, 0.3, 10.0, 4, Exec::parallel).indices);
    MethodSpec peak;
    peak.method = Method::sta_peak;
    CHECK(run_method(lc.cloud, peak, 0.3, 6, Exec::serial).indices ==
          run_method(lc.cloud, peak, 0.3, 6, Exec::parallel).indices);
  }
}

TEST_CASE("evaluation does not depend on the worker count") {
  const auto data = scenes(900, 6);
  std::vector<MethodSpec> specs(3);
  specs[0].method = Method::random;
  specs[1].method = Method::sta_peak;
  specs[2].method = Method::octree;
  EvalOptions opts;
  opts.rates = {0.1, 0.3};
  const auto one = evaluate(specs, data, opts);
  opts.jobs = 4;
  const auto four = evaluate(specs, data, opts);
  REQUIRE(one.size() == four.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    CHECK(one[i].method == four[i].method);
    CHECK(one[i].object_retention == four[i].object_retention);
    CHECK(one[i].instance_recall == four[i].instance_recall);
  }
}
