#include <doctest.h>

#include <cmath>

#include "dppg/dsp.hpp"
#include "dppg/roi.hpp"
#include "dppg/simulator.hpp"
#include "support.hpp"

using namespace dppg;

namespace {

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = dsp::mean(a), mb = dsp::mean(b);
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += (a[i] - ma) * (b[i] - mb);
    aa += (a[i] - ma) * (a[i] - ma);
    bb += (b[i] - mb) * (b[i] - mb);
  }
  return ab / std::sqrt(aa * bb);
}

// Flat face: uniform light, reflectance and perfusion, nothing else.
sim::SceneSpec flat_scene(double duration) {
  sim::SceneSpec s;
  s.duration = duration;
  s.illumination.level = 200.0;
  s.face.features = false;
  s.texture.amplitude = 0.0;
  s.perfusion.alpha_max = 0.004;
  s.perfusion.min_level = 1.0;
  s.ppg.h2 = s.ppg.h3 = 0.0;
  s.quantize = false;
  s.regions = {{"patch", {{140, 100}, {160, 100}, {160, 120}, {140, 120}}}};
  return s;
}

}  // namespace

TEST_CASE("pulse model: exact spacing without jitter") {
  sim::PpgModel m;
  m.h2 = m.h3 = 0.0;
  const sim::PulseModel p(m, 40.0, 3);
  const auto& b = p.beats();
  for (std::size_t i = 1; i < b.size(); ++i) REQUIRE(b[i] - b[i - 1] == doctest::Approx(60.0 / 72.0).epsilon(1e-12));
  CHECK(p(b[5]) == doctest::Approx(-1.0));
}

TEST_CASE("pulse model: jitter spread") {
  sim::PpgModel m;
  m.jitter_ms = 30.0;
  const sim::PulseModel p(m, 200.0, 4);
  const auto b = p.beats_within(0.0, 200.0);
  REQUIRE(b.size() >= 200);
  std::vector<double> ibi;
  for (std::size_t i = 1; i <= 200; ++i) ibi.push_back(1000.0 * (b[i] - b[i - 1]));
  double ss = 0;
  const double mu = dsp::mean(ibi);
  for (double v : ibi) ss += (v - mu) * (v - mu);
  const double sd = std::sqrt(ss / (ibi.size() - 1));
  CHECK(sd >= 24.0);
  CHECK(sd <= 36.0);
}

TEST_CASE("pulse model: second harmonic 10.5 dB below the fundamental") {
  sim::PpgModel m;
  m.h2 = 0.3;
  m.h3 = 0.0;
  const sim::PulseModel p(m, 40.0, 5);
  const sim::PpgTruth tr = p.sample(30.0, 40.0);
  const dsp::Psd s = dsp::psd(tr.samples, 30.0);
  const double p1 = s.power[s.argmax(1.0, 1.4)], p2 = s.power[s.argmax(2.2, 2.6)];
  CHECK(s.freqs[s.argmax(0.5, 5.0)] == doctest::Approx(1.2).epsilon(0.01));
  CHECK(10.0 * std::log10(p1 / p2) == doctest::Approx(10.0 * std::log10(1.0 / 0.09)).epsilon(0.03));
}

TEST_CASE("no signal and no motion: identical frames") {
  sim::SceneSpec s = flat_scene(1.0);
  s.perfusion.alpha_max = 0.0;
  s.face.features = true;
  s.texture.amplitude = 0.15;
  const sim::Rendered r = sim::render(s);
  for (std::size_t t = 1; t < r.frames.size(); ++t) REQUIRE(r.frames.frames[t] == r.frames.frames[0]);
}

TEST_CASE("forward model on a flat patch") {
  const sim::SceneSpec s = flat_scene(4.0);
  const sim::Scene scene(s);
  const Quad q{{{{140, 100}, {160, 100}, {160, 120}, {140, 120}}}};
  for (std::size_t t = 0; t < s.frame_count(); t += 7) {
    const double y = *roi::average_roi(scene.clean_frame(t), q);
    const double p = scene.pulse()(static_cast<double>(t) / s.fps);
    REQUIRE(y == doctest::Approx(200.0 * (0.5 + 0.004 * p)).epsilon(1e-12));
  }
}

TEST_CASE("quantized flat patch still follows the pulse") {
  sim::SceneSpec s = flat_scene(40.0);
  s.quantize = true;
  const sim::Scene scene(s);
  const Quad q{{{{140, 100}, {160, 100}, {160, 120}, {140, 120}}}};
  std::vector<double> y, p;
  for (std::size_t t = 0; t < s.frame_count(); ++t) {
    y.push_back(*roi::average_roi(scene.frame(t), q));
    p.push_back(scene.pulse()(static_cast<double>(t) / s.fps));
  }
  CHECK(pearson(y, p) > 0.9);
}

TEST_CASE("presets: fair renders, dark has a quarter of the amplitude") {
  const sim::Rendered fair = sim::render(sim::preset("static_fair"));
  CHECK(fair.frames.size() == 1200);
  const sim::SceneTruth dark = sim::Scene(sim::preset("static_dark")).truth();
  REQUIRE(dark.rois.size() == fair.truth.rois.size());
  for (std::size_t i = 0; i < dark.rois.size(); ++i)
    CHECK(dark.rois[i].amplitude == doctest::Approx(0.25 * fair.truth.rois[i].amplitude).epsilon(1e-12));
}

TEST_CASE("reading: displacement at 10 s is the script integral") {
  const sim::SceneSpec s = sim::preset("reading");
  const sim::Scene scene(s);
  double x = 0, y = 0;
  for (std::size_t t = 1; t <= 300; ++t) {
    const double time = static_cast<double>(t) / s.fps;
    for (const auto& seg : s.head_motion)
      if (time >= seg.t_start && time < seg.t_end) x += seg.step.tx, y += seg.step.ty;
  }
  CHECK(scene.head(300).tx == doctest::Approx(x).epsilon(1e-12));
  CHECK(scene.head(300).ty == doctest::Approx(y).epsilon(1e-12));
  double fastest = 0;
  for (const auto& seg : s.head_motion) fastest = std::max(fastest, std::hypot(seg.step.tx, seg.step.ty));
  CHECK(fastest <= 3.0);
}

TEST_CASE("scene files and presets") {
  const sim::SceneSpec s = sim::parse_scene("base=static_fair\nseed=9\nduration=2\nillum.level=180\n");
  CHECK(s.seed == 9);
  CHECK(s.duration == 2.0);
  CHECK(s.illumination.level == 180.0);
  CHECK(s.perfusion.zero_fraction == 0.4);
  CHECK_THROWS_AS(sim::parse_scene("base=static_fair\nno_such_key=1\n"), InputError);
  CHECK_THROWS_AS(sim::preset("nope"), InputError);
  CHECK(sim::preset_names().size() == sim::preset_scenes().size());
}

TEST_CASE("artifacts and determinism") {
  sim::SceneSpec s = sim::preset("static_fair", 7);
  s.duration = 1.0;
  const sim::Rendered a = sim::render(s), b = sim::render(s);
  CHECK(a.frames == b.frames);
  s.seed = 8;
  CHECK_FALSE(sim::render(s).frames == a.frames);

  test::TempDir dir("art");
  s.seed = 7;
  sim::write_artifacts(a, s, dir.path());
  for (const char* f : {"regions.txt", "truth.csv", "beats.csv", "roi_truth.csv", "affines.csv", "scene.txt"})
    CHECK(std::filesystem::exists(dir.path() / f));
  const FrameSequence seq = load_sequence(dir.path() / "frames");
  CHECK(seq == a.frames);
  CHECK(load_ground_truth(dir.path() / "truth.csv").sample_rate == doctest::Approx(500.0).epsilon(1e-6));
}
