#include <doctest.h>

#include <cmath>

#include "dppg/evaluate.hpp"
#include "dppg/pipeline.hpp"
#include "dppg/simulator.hpp"
#include "support.hpp"

using namespace dppg;

namespace {

struct Clip {
  sim::SceneSpec spec;
  sim::Rendered rendered;
  RegionFile regions;
  GroundTruth truth;
};

Clip clip(const std::string& preset, double duration) {
  Clip c;
  c.spec = sim::preset(preset);
  c.spec.duration = duration;
  c.rendered = sim::render(c.spec);
  c.regions = c.rendered.truth.regions;
  c.truth.sample_rate = c.rendered.truth.ppg_500.fs;
  c.truth.samples = c.rendered.truth.ppg_500.samples;
  c.truth.beat_times = c.rendered.truth.ppg_500.beat_times;
  return c;
}

// The truth as the evaluator sees it: spline onto the frame grid, then
// bandpassed per epoch.
eval::Series perfect_estimate(const GroundTruth& truth, double fs, std::size_t n, std::size_t epoch_len) {
  std::vector<double> times(n);
  for (std::size_t i = 0; i < n; ++i) times[i] = static_cast<double>(i) / fs;
  const auto raw = dsp::spline_at(truth.samples, truth.sample_rate, times);
  eval::Series s{fs, std::vector<double>(n), std::vector<std::size_t>(n), std::vector<bool>(n, true)};
  for (std::size_t a = 0; a < n; a += epoch_len) {
    const std::size_t b = std::min(n, a + epoch_len);
    const auto f = dsp::bandpass_zero_phase(std::span<const double>(raw.data() + a, b - a), {});
    for (std::size_t i = a; i < b; ++i) s.values[i] = f[i - a], s.epoch[i] = a / epoch_len;
  }
  return s;
}

}  // namespace

TEST_CASE("epoch bounds merge a short tail") {
  auto b = pipeline::epoch_bounds(1200, 30.0, 10.0, 64);
  CHECK(b.size() == 4);
  b = pipeline::epoch_bounds(1230, 30.0, 10.0, 64);
  CHECK(b.size() == 4);
  CHECK(b.back() == std::pair<std::size_t, std::size_t>{900, 1230});
  b = pipeline::epoch_bounds(1300, 30.0, 10.0, 64);
  CHECK(b.size() == 5);
  CHECK_THROWS_AS(pipeline::epoch_bounds(50, 30.0, 10.0, 64), InputError);
}

TEST_CASE("both estimators emit one sample per frame") {
  const Clip c = clip("static_fair", 20.0);
  pipeline::EstimateConfig cfg;
  const auto d = pipeline::estimate_distanceppg(c.rendered.frames, c.regions, cfg);
  CHECK(d.ppg.size() == 600);
  CHECK(d.epochs.size() == 2);
  CHECK(d.estimator == "distanceppg");
  const auto f = pipeline::estimate_face_average(c.rendered.frames, c.regions, cfg);
  CHECK(f.ppg.size() == 600);
  CHECK(f.valid.size() == 600);

  const auto ev = eval::evaluate(eval::from_result(d), c.truth, c.truth.beat_times);
  for (std::size_t i = 0; i < ev.pr_est.pr.size(); ++i) CHECK(std::abs(ev.pr_est.pr[i] - ev.pr_ref.pr[i]) <= 1.0);
}

TEST_CASE("evaluation of the truth against itself") {
  const sim::PulseModel pm(sim::PpgModel{}, 40.0, 3);
  const sim::PpgTruth p = pm.sample(500.0, 40.0);
  GroundTruth gt;
  gt.sample_rate = p.fs;
  gt.samples = p.samples;
  const eval::Series s = perfect_estimate(gt, 30.0, 1200, 300);
  const auto ev = eval::evaluate(s, gt, p.beat_times);
  CHECK(ev.mean_snr_db == vitals::kSnrCapDb);
  for (const auto& e : ev.snr) CHECK(e.snr.lag_samples == 0);
  for (std::size_t i = 0; i < ev.pr_est.pr.size(); ++i) CHECK(ev.pr_est.pr[i] == ev.pr_ref.pr[i]);
  CHECK(ev.match.missing_pct == 0.0);
  CHECK(ev.match.rmse_ms < 5.0);
}

TEST_CASE("evaluation with orthogonal noise at -10 dB") {
  const sim::PulseModel pm(sim::PpgModel{}, 40.0, 3);
  const sim::PpgTruth p = pm.sample(500.0, 40.0);
  GroundTruth gt;
  gt.sample_rate = p.fs;
  gt.samples = p.samples;
  eval::Series s = perfect_estimate(gt, 30.0, 1200, 300);
  for (std::size_t a = 0; a < 1200; a += 300) {
    std::span<double> z(s.values.data() + a, 300);
    auto n = test::tone(3.7, 30.0, 300, 1.0, 0.4);
    double zz = 0, nz = 0, nn = 0;
    for (std::size_t i = 0; i < 300; ++i) zz += z[i] * z[i], nz += n[i] * z[i];
    for (std::size_t i = 0; i < 300; ++i) n[i] -= nz / zz * z[i], nn += n[i] * n[i];
    for (std::size_t i = 0; i < 300; ++i) z[i] += n[i] * std::sqrt(zz / 10.0 / nn);
  }
  const auto ev = eval::evaluate(s, gt, p.beat_times);
  for (const auto& e : ev.snr) CHECK(e.snr.snr_db == doctest::Approx(10.0).epsilon(0.01));
}

TEST_CASE("evaluation rejects spans that do not overlap") {
  GroundTruth gt;
  gt.sample_rate = 500.0;
  gt.start_time = 100.0;
  gt.samples.assign(20001, 0.0);
  eval::Series s{30.0, std::vector<double>(1200, 0.0), std::vector<std::size_t>(1200, 0), std::vector<bool>(1200, true)};
  CHECK_THROWS_AS(eval::evaluate(s, gt, {}), InputError);
}

TEST_CASE("integer NCC shift of the decimated frame") {
  const GrayImage a = test::textured(160, 120, 2);
  const GrayImage b = test::textured(160, 120, 2, 6.0, -4.0);
  const FloatImage da = pipeline::decimate2(a), db = pipeline::decimate2(b);
  CHECK(da.width == 80);
  const auto [dx, dy] = pipeline::ncc_shift(da, db, 20, 15, 40, 30, {0, 0}, 5);
  CHECK(dx == 3);
  CHECK(dy == -2);
}
