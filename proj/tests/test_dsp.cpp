#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "dppg/dsp.hpp"
#include "dppg/image.hpp"
#include "support.hpp"

using namespace dppg;
using std::numbers::pi;

namespace {

// Magnitude of the analog Butterworth bandpass at the prewarped frequency;
// the bilinear transform maps it exactly onto the digital response.
double analytic_bandpass_gain(double f, const dsp::BandpassSpec& s) {
  auto warp = [&](double hz) { return 2.0 * s.fs * std::tan(pi * hz / s.fs); };
  const double w = warp(f), wl = warp(s.low), wh = warp(s.high);
  const double x = (w * w - wl * wh) / (w * (wh - wl));
  return 1.0 / std::sqrt(1.0 + std::pow(x, 2.0 * s.order));
}

// Amplitude and phase of the best-fitting sinusoid at `f` over [i0, i1).
std::pair<double, double> fit_tone(const std::vector<double>& x, double f, double fs, std::size_t i0, std::size_t i1) {
  double ss = 0, sc = 0, cc = 0, xs = 0, xc = 0;
  for (std::size_t i = i0; i < i1; ++i) {
    const double s = std::sin(2 * pi * f * i / fs), c = std::cos(2 * pi * f * i / fs);
    ss += s * s, sc += s * c, cc += c * c, xs += x[i] * s, xc += x[i] * c;
  }
  const double det = ss * cc - sc * sc;
  const double a = (xs * cc - xc * sc) / det, b = (xc * ss - xs * sc) / det;
  return {std::hypot(a, b), std::atan2(b, a)};
}

}  // namespace

TEST_CASE("designed response matches the analytic Butterworth magnitude") {
  const dsp::BandpassSpec spec;
  const dsp::SosFilter f = dsp::design_butterworth_bandpass(spec);
  CHECK(f.sections.size() == 2);
  for (double hz : {0.1, 0.5, 0.9, 1.5, 2.2, 3.7, 5.0, 8.0, 10.0, 14.5})
    CHECK(std::abs(f.response(hz, spec.fs)) == doctest::Approx(analytic_bandpass_gain(hz, spec)).epsilon(1e-9));
  CHECK(std::abs(f.response(0.5, spec.fs)) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-9));
  CHECK(dsp::filtfilt_padlen(f) == 15);
}

TEST_CASE("zero-phase output matches scipy sosfiltfilt") {
  // scipy.signal.sosfiltfilt(butter(2, [0.5, 5], 'bandpass', fs=30, output='sos'), x)
  std::vector<double> x(300);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(0.37 * i) + 0.5 * std::cos(0.05 * i) + 0.001 * i;
  const std::vector<double> y = dsp::bandpass_zero_phase(x, {});
  CHECK(y[0] == doctest::Approx(-0.09177084114385048).epsilon(1e-9));
  CHECK(y[7] == doctest::Approx(0.5508353443330977).epsilon(1e-9));
  CHECK(y[150] == doctest::Approx(-0.8603052771255324).epsilon(1e-9));
  CHECK(y[299] == doctest::Approx(0.20865977282563442).epsilon(1e-9));
  double sum = 0, sumsq = 0;
  for (double v : y) sum += v, sumsq += v * v;
  CHECK(sum == doctest::Approx(13.228042839924013).epsilon(1e-9));
  CHECK(sumsq == doctest::Approx(156.704331698442).epsilon(1e-9));
}

TEST_CASE("DC is rejected") {
  const std::vector<double> y = dsp::bandpass_zero_phase(std::vector<double>(600, 100.0), {});
  for (double v : y) REQUIRE(std::abs(v) < 1e-6);
}

TEST_CASE("passband tone: gain and phase") {
  const dsp::BandpassSpec spec;
  const auto x = test::tone(1.5, 30.0, 900);
  const auto y = dsp::bandpass_zero_phase(x, spec);
  const auto [amp, phase] = fit_tone(y, 1.5, 30.0, 300, 600);
  CHECK(amp >= 0.95);
  CHECK(amp <= 1.0);
  const double g = analytic_bandpass_gain(1.5, spec);
  CHECK(amp == doctest::Approx(g * g).epsilon(1e-3));
  CHECK(std::abs(phase) < 1e-3);
}

TEST_CASE("stopband tone is suppressed") {
  const auto y = dsp::bandpass_zero_phase(test::tone(10.0, 30.0, 900), {});
  CHECK(fit_tone(y, 10.0, 30.0, 300, 600).first < 0.05);
}

TEST_CASE("zero lag: cross-correlation peaks at 0") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> x(600);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(2 * pi * 1.2 * i / 30.0) + 0.3 * n(rng);
  const auto y = dsp::bandpass_zero_phase(x, {});
  int best = 99;
  double best_v = -1e300;
  for (int lag = -10; lag <= 10; ++lag) {
    double s = 0;
    for (int i = 50; i < 550; ++i) s += y[i] * x[i + lag];
    if (s > best_v) best_v = s, best = lag;
  }
  CHECK(best == 0);
}

TEST_CASE("filter input validation") {
  CHECK_THROWS_AS(dsp::bandpass_zero_phase(std::vector<double>(15, 1.0), {}), InputError);
  std::vector<double> bad(100, 0.0);
  bad[40] = std::nan("");
  CHECK_THROWS_AS(dsp::bandpass_zero_phase(bad, {}), InputError);
  dsp::BandpassSpec s;
  s.high = 20.0;
  CHECK_THROWS_AS(s.validate(), InputError);
}

TEST_CASE("psd: single tone, zero signal and Parseval") {
  const auto x = test::tone(1.2, 30.0, 300);
  const dsp::Psd p = dsp::psd(x, 30.0);
  CHECK(std::abs(p.freqs[p.argmax(0.5, 5.0)] - 1.2) <= p.resolution / 2);

  const dsp::Psd z = dsp::psd(std::vector<double>(300, 0.0), 30.0);
  for (double v : z.power) REQUIRE(v == 0.0);

  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> w(300);
  double ms = 0;
  for (auto& v : w) v = n(rng), ms += v * v;
  ms /= w.size();
  const dsp::Psd r = dsp::psd(w, 30.0, dsp::Window::rectangular);
  double riemann = 0;
  for (double v : r.power) riemann += v * r.resolution;
  CHECK(riemann == doctest::Approx(ms).epsilon(1e-9));
  CHECK_THROWS_AS(dsp::psd(std::vector<double>(10, 1.0), 30.0), InputError);
}

TEST_CASE("psd: white-noise band power scales with bandwidth") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  double narrow = 0, wide = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(300);
    for (auto& v : x) v = n(rng);
    const dsp::Psd p = dsp::psd(x, 30.0);
    narrow += p.band_power(2.0, 3.0);
    wide += p.band_power(4.0, 8.0);
  }
  CHECK(wide / narrow == doctest::Approx(4.0).epsilon(0.2));
  // Unit-variance white noise spreads 1 unit^2 over 15 Hz.
  CHECK(wide / 100 == doctest::Approx(4.0 / 15.0).epsilon(0.2));
}

TEST_CASE("hamming window") {
  const auto w = dsp::hamming(11);
  CHECK(w[0] == doctest::Approx(0.08));
  CHECK(w[5] == doctest::Approx(1.0));
  for (std::size_t i = 0; i < w.size(); ++i) CHECK(w[i] == doctest::Approx(w[w.size() - 1 - i]));
}

TEST_CASE("spline: ramp, identity and analytic tone") {
  std::vector<double> ramp(50);
  for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = 3.0 - 0.7 * i;
  const auto up = dsp::spline_resample(ramp, 30.0, 500.0);
  for (std::size_t j = 0; j < up.size(); ++j) REQUIRE(std::abs(up[j] - (3.0 - 0.7 * 30.0 * j / 500.0)) < 1e-9);

  const auto x = test::tone(1.3, 30.0, 100);
  const auto same = dsp::spline_resample(x, 30.0, 30.0);
  REQUIRE(same.size() == x.size());
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(same[i] == doctest::Approx(x[i]).epsilon(1e-12));

  const auto t2 = dsp::spline_resample(test::tone(2.0, 30.0, 300), 30.0, 500.0);
  double worst = 0;
  for (std::size_t j = 0; j < t2.size(); ++j)
    worst = std::max(worst, std::abs(t2[j] - std::sin(2 * pi * 2.0 * j / 500.0)));
  CHECK(worst < 0.01);
}

TEST_CASE("spline matches scipy natural CubicSpline") {
  std::vector<double> t(20), v(20);
  for (std::size_t i = 0; i < 20; ++i) t[i] = i / 30.0, v[i] = std::cos(3 * t[i]) + t[i] * t[i];
  const dsp::CubicSpline s(t, v);
  CHECK(s(0.01) == doctest::Approx(0.9992815019721075).epsilon(1e-12));
  CHECK(s(0.2) == doctest::Approx(0.8653356149096783).epsilon(1e-12));
  CHECK(s(0.5) == doctest::Approx(0.3207372016677029).epsilon(1e-12));
  CHECK(s(0.61) == doctest::Approx(0.11595046304390454).epsilon(1e-12));
  CHECK(s(-1.0) == doctest::Approx(v.front()));
}
