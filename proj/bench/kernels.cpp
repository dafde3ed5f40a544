// Parallel kernels against their serial references.
#include <benchmark/benchmark.h>

#include <random>

#include "dppg/mrc.hpp"
#include "dppg/roi.hpp"
#include "dppg/simulator.hpp"
#include "dppg/tracking.hpp"

using namespace dppg;

namespace {

const sim::Scene& scene() {
  static const sim::Scene s(sim::preset("static_fair"));
  return s;
}

std::vector<Quad> quads() {
  std::vector<Quad> q;
  for (const auto& r : roi::grid_regions(scene().spec().regions, 10).rois) q.push_back(r.quad);
  return q;
}

std::vector<mrc::RoiChannel> channels(std::size_t n) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> noise(0.0, 0.5);
  std::vector<mrc::RoiChannel> out;
  for (std::size_t c = 0; c < n; ++c) {
    std::vector<double> x(300);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(2 * 3.14159265358979 * 1.2 * i / 30.0) + noise(rng);
    out.push_back(mrc::make_channel(static_cast<int>(c), dsp::bandpass_zero_phase(x, {})));
  }
  return out;
}

struct KltInput {
  tracking::Pyramid prev, next;
  tracking::FeatureSet pts;
};

const KltInput& klt_input() {
  static const KltInput in = [] {
    const tracking::TrackingConfig cfg;
    const GrayImage a = scene().frame(0);
    KltInput k{tracking::Pyramid::build(a, 3), tracking::Pyramid::build(scene().frame(1), 3), {}};
    for (const auto& r : scene().spec().regions) {
      const auto f = tracking::good_features(a, r.polygon, cfg.max_features, cfg);
      k.pts.points.insert(k.pts.points.end(), f.points.begin(), f.points.end());
    }
    k.pts.alive.assign(k.pts.points.size(), true);
    return k;
  }();
  return in;
}

void BM_average_rois(benchmark::State& st) {
  const GrayImage f = scene().frame(0);
  const auto q = quads();
  for (auto _ : st) benchmark::DoNotOptimize(roi::average_rois(f, q));
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(q.size()));
}

void BM_average_rois_serial(benchmark::State& st) {
  const GrayImage f = scene().frame(0);
  const auto q = quads();
  for (auto _ : st) benchmark::DoNotOptimize(roi::average_rois_serial(f, q));
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(q.size()));
}

void BM_klt_track(benchmark::State& st) {
  const auto& k = klt_input();
  for (auto _ : st) benchmark::DoNotOptimize(tracking::klt_track(k.prev, k.next, k.pts));
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(k.pts.points.size()));
}

void BM_klt_track_serial(benchmark::State& st) {
  const auto& k = klt_input();
  for (auto _ : st) benchmark::DoNotOptimize(tracking::klt_track_serial(k.prev, k.next, k.pts));
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(k.pts.points.size()));
}

void BM_compute_weights(benchmark::State& st) {
  const auto ch = channels(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(mrc::compute_weights(ch, 72.0, 30.0));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_compute_weights_serial(benchmark::State& st) {
  const auto ch = channels(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(mrc::compute_weights_serial(ch, 72.0, 30.0));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

}  // namespace

BENCHMARK(BM_average_rois);
BENCHMARK(BM_average_rois_serial);
BENCHMARK(BM_klt_track);
BENCHMARK(BM_klt_track_serial);
BENCHMARK(BM_compute_weights)->Arg(30)->Arg(120);
BENCHMARK(BM_compute_weights_serial)->Arg(30)->Arg(120);

BENCHMARK_MAIN();
