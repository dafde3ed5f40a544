#include <doctest.h>

#include <numbers>
#include <random>

#include "dppg/mrc.hpp"
#include "dppg/vitals.hpp"
#include "support.hpp"

using namespace dppg;

namespace {

// PSD with a constant density on a 0.01 Hz grid from 0 to 15 Hz.
dsp::Psd flat_psd(double density) {
  dsp::Psd p;
  p.resolution = 0.01;
  for (int k = 0; k <= 1500; ++k) {
    p.freqs.push_back(k * 0.01);
    p.power.push_back(density);
  }
  return p;
}

std::vector<mrc::RoiChannel> tone_channels(double hz, std::size_t count, double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, noise);
  std::vector<mrc::RoiChannel> out;
  for (std::size_t c = 0; c < count; ++c) {
    auto x = test::tone(hz, 30.0, 300, 0.5, 0.3 * c);
    for (auto& v : x) v += n(rng);
    out.push_back(mrc::make_channel(static_cast<int>(c), x));
  }
  return out;
}

}  // namespace

TEST_CASE("amplitude gate") {
  CHECK_FALSE(mrc::amplitude_gate(mrc::make_channel(0, test::tone(1.2, 30, 300)), 8.0).gated);

  std::vector<double> spike(300, 0.0);
  spike[100] = 10.0;
  const auto g = mrc::amplitude_gate(mrc::make_channel(1, spike), 8.0);
  CHECK(g.gated);
  CHECK(g.reason == mrc::GateReason::amplitude);

  std::vector<double> eight(300, 0.0);
  eight[10] = -4.0, eight[20] = 4.0;
  const auto e = mrc::make_channel(2, eight);
  CHECK(e.amp_range == 8.0);
  CHECK(mrc::amplitude_gate(e, 8.0).gated);
  eight[20] = 3.999;
  CHECK_FALSE(mrc::amplitude_gate(mrc::make_channel(2, eight), 8.0).gated);

  auto pre = mrc::make_channel(3, spike);
  pre.gated = true;
  pre.reason = mrc::GateReason::tracking;
  CHECK(mrc::amplitude_gate(pre, 8.0).reason == mrc::GateReason::tracking);
}

TEST_CASE("coarse PR from a tone and the jump rule") {
  mrc::PrHistory hist;
  const auto ch = tone_channels(1.2, 4, 0.05, 1);
  const auto pr = mrc::coarse_pr(ch, 30.0, hist);
  REQUIRE(pr);
  // Grid spacing is 30 / 2048 Hz = 0.88 bpm.
  CHECK(*pr == doctest::Approx(72.0).epsilon(0.0062));
  CHECK(hist.size() == 1);

  mrc::PrHistory h4;
  for (double v : {70.0, 71.0, 72.0, 70.0}) h4.push(v);
  const auto fast = tone_channels(2.5, 3, 0.02, 2);
  CHECK(*mrc::coarse_pr(fast, 30.0, h4) == 70.5);

  mrc::PrHistory h5(4);
  for (double v : {70.0, 71.0, 72.0, 70.0, 71.0}) h5.push(v);
  CHECK(h5.size() == 4);
  CHECK(h5.values().front() == 71.0);

  mrc::PrHistory none;
  std::vector<mrc::RoiChannel> all_gated = ch;
  for (auto& c : all_gated) c.gated = true;
  CHECK_FALSE(mrc::coarse_pr(all_gated, 30.0, none));
}

TEST_CASE("goodness on constructed spectra") {
  mrc::MrcConfig cfg;
  CHECK(mrc::goodness_from_psd(flat_psd(1.0), 90.0, 0.2, cfg) == doctest::Approx(0.4 / 4.1).epsilon(1e-9));

  // Tone of power 9 on one bin plus noise of total in-band power 3; b = 0.25
  // puts 1/9 of that noise inside the PR band.
  dsp::Psd p = flat_psd(3.0 / 4.5);
  p.power[150] += 9.0 / p.resolution;
  CHECK(mrc::goodness_from_psd(p, 90.0, 0.25, cfg) == doctest::Approx(3.5).epsilon(1e-9));

  const auto pure = mrc::make_channel(0, test::tone(1.2, 30.0, 300));
  dsp::Psd only_tone = flat_psd(0.0);
  only_tone.power[120] = 1.0;
  CHECK(mrc::goodness_from_psd(only_tone, 72.0, 0.2, cfg) == cfg.goodness_cap);
  CHECK(mrc::goodness(pure, 72.0, 0.2, 30.0) > 100.0);
  CHECK(mrc::goodness_from_psd(flat_psd(0.0), 72.0, 0.2, cfg) == 0.0);
}

TEST_CASE("floor gate keeps the boundary") {
  mrc::GoodnessWeights w;
  w.roi_ids = {1, 2, 3};
  w.g = {0.24, 0.25, 5.52};
  const auto f = mrc::floor_gate(w, 0.25);
  CHECK(f.g[0] == 0.0);
  CHECK(f.g[1] == 0.25);
  CHECK(f.g[2] == 5.52);
}

TEST_CASE("combine: single channel and scale invariance") {
  const auto ch = tone_channels(1.2, 1, 0.1, 3);
  mrc::GoodnessWeights w{{0}, {3.0}, 1.2, 0.2};
  const auto e = mrc::combine(ch, w);
  REQUIRE(e);
  const double m = dsp::mean(ch[0].filtered);
  std::vector<double> c(ch[0].filtered);
  for (auto& v : c) v -= m;
  const double r = dsp::rms(c);
  for (std::size_t i = 0; i < c.size(); ++i) REQUIRE(e->samples[i] == doctest::Approx(c[i] / r).epsilon(1e-12));
  CHECK(dsp::rms(e->samples) == doctest::Approx(1.0));
  CHECK(e->contributing_roi_count == 1);

  std::vector<mrc::RoiChannel> two{ch[0], ch[0]};
  two[1].roi_id = 1;
  const auto a = mrc::combine(two, {{0, 1}, {1.0, 1.0}, 1.2, 0.2});
  const auto b = mrc::combine(two, {{0, 1}, {2.0, 2.0}, 1.2, 0.2});
  for (std::size_t i = 0; i < a->samples.size(); ++i) REQUIRE(a->samples[i] == doctest::Approx(b->samples[i]).epsilon(1e-12));

  CHECK_FALSE(mrc::combine(two, {{0, 1}, {0.0, 0.0}, 1.2, 0.2}));
}

TEST_CASE("goodness weighting beats the best single channel") {
  // Same pulse in every channel, noise levels from mild to heavy; Monte-Carlo
  // over independent noise draws.
  std::mt19937_64 rng(17);
  const std::vector<double> sigmas{0.3, 0.5, 0.8, 1.5, 3.0};
  const int trials = 40;
  double combined = 0, best = 0;
  for (int t = 0; t < trials; ++t) {
    const auto s = test::tone(1.2, 30.0, 300, 0.5);
    std::vector<mrc::RoiChannel> ch;
    for (std::size_t c = 0; c < sigmas.size(); ++c) {
      std::normal_distribution<double> n(0.0, sigmas[c]);
      auto x = s;
      for (auto& v : x) v += n(rng);
      ch.push_back(mrc::make_channel(static_cast<int>(c), dsp::bandpass_zero_phase(x, {})));
    }
    const auto e = mrc::combine(ch, mrc::compute_weights(ch, 72.0, 30.0));
    REQUIRE(e);
    const auto z = dsp::bandpass_zero_phase(s, {});
    double best_single = -1e9;
    for (const auto& c : ch) best_single = std::max(best_single, vitals::snr_core(c.filtered, z).snr_db);
    combined += vitals::snr_core(e->samples, z).snr_db / trials;
    best += best_single / trials;
  }
  CHECK(combined >= best);
}

TEST_CASE("property: parallel weights equal the serial reference") {
  auto ch = tone_channels(1.3, 64, 0.4, 5);
  for (std::size_t i = 0; i < ch.size(); i += 7) ch[i].gated = true;
  const auto a = mrc::compute_weights(ch, 78.0, 30.0);
  const auto b = mrc::compute_weights_serial(ch, 78.0, 30.0);
  CHECK(a.g == b.g);
  CHECK(a.roi_ids == b.roi_ids);
  for (std::size_t i = 0; i < ch.size(); i += 7) CHECK(a.g[i] == 0.0);
}

TEST_CASE("process_epoch gates and falls back to previous weights") {
  auto ch = tone_channels(1.2, 5, 0.05, 8);
  std::vector<double> wild = test::tone(1.2, 30.0, 300, 6.0);
  ch[4] = mrc::make_channel(4, wild);
  std::vector<double> noise(300);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  for (auto& v : noise) v = n(rng);
  ch[3] = mrc::make_channel(3, dsp::bandpass_zero_phase(noise, {}));

  mrc::PrHistory hist;
  const auto r = mrc::process_epoch(ch, 30.0, hist, {});
  CHECK(r.channels[4].reason == mrc::GateReason::amplitude);
  CHECK(r.weights.g[4] == 0.0);
  CHECK(r.channels[3].reason == mrc::GateReason::floor);
  CHECK(r.weights.g[3] == 0.0);
  CHECK(r.estimate->contributing_roi_count == 3);
  CHECK_FALSE(r.weights_fallback);

  std::vector<mrc::RoiChannel> flat{mrc::make_channel(0, std::vector<double>(300, 0.0))};
  mrc::PrHistory h2;
  const auto fb = mrc::process_epoch(flat, 30.0, h2, {{0, 2.0}});
  CHECK(fb.weights_fallback);
  CHECK(fb.weights.g[0] == 2.0);
  CHECK_FALSE(fb.estimate);
}
