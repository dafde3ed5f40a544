#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "dppg/vitals.hpp"
#include "support.hpp"

using namespace dppg;
using std::numbers::pi;

TEST_CASE("windowed PR of a steady tone") {
  const auto x = test::tone(1.2, 30.0, 1200);
  const auto pr = vitals::pulse_rate(x, 30.0);
  CHECK(pr.pr.size() == 7);
  for (std::size_t i = 0; i < pr.pr.size(); ++i) {
    CHECK(pr.has_peak[i]);
    CHECK(pr.pr[i] == doctest::Approx(72.0).epsilon(0.007));
  }
}

TEST_CASE("windowed PR follows a rate step") {
  std::vector<double> x(1200);
  double phase = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    phase += 2 * pi * (i < 600 ? 1.0 : 1.5) / 30.0;
    x[i] = std::sin(phase);
  }
  const auto pr = vitals::pulse_rate(x, 30.0);
  for (std::size_t i = 0; i < pr.pr.size(); ++i) {
    if (pr.centers[i] <= 15.0) CHECK(std::abs(pr.pr[i] - 60.0) < 1.0);
    if (pr.centers[i] >= 25.0) CHECK(std::abs(pr.pr[i] - 90.0) < 1.0);
  }
}

TEST_CASE("zero signal has no dominant peak") {
  const auto pr = vitals::pulse_rate(std::vector<double>(1200, 0.0), 30.0);
  REQUIRE_FALSE(pr.has_peak.empty());
  for (bool b : pr.has_peak) CHECK_FALSE(b);
}

TEST_CASE("beats at the troughs of -cos") {
  std::vector<double> x(1200);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = -std::cos(2 * pi * 1.2 * i / 30.0);
  const auto bt = vitals::detect_beats(x, 30.0, 72.0);
  REQUIRE(bt.beat_times.size() >= 46);
  for (double t : bt.beat_times) CHECK(std::abs(t * 1.2 - std::round(t * 1.2)) / 1.2 < 0.002);
  for (double ibi : bt.ibis_ms) CHECK(ibi == doctest::Approx(1000.0 / 1.2).epsilon(0.003));
}

TEST_CASE("shallow dimples inside the refractory are rejected") {
  // Sampled at 500 Hz so a 2 ms dip can carry its own local minimum.
  const double fs = 500.0;
  std::vector<double> x(20000);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = i / fs;
    x[i] = -std::cos(2 * pi * 1.2 * t);
    const double k = std::round((t - 0.05) * 1.2);
    const double dt = t - (k / 1.2 + 0.05);
    x[i] -= 0.015 * std::exp(-dt * dt / (2 * 0.002 * 0.002));
  }
  std::size_t local_minima = 0;
  for (std::size_t i = 1; i + 1 < x.size(); ++i) local_minima += x[i] < x[i - 1] && x[i] < x[i + 1];
  REQUIRE(local_minima > 90);  // dimples really are minima

  // The trough at t = 0 sits on the boundary, so only interior beats count.
  const auto bt = vitals::detect_beats(x, fs, 72.0);
  std::size_t interior = 0;
  for (double t : bt.beat_times) {
    if (t < 0.5) continue;
    ++interior;
    CHECK(std::abs(t * 1.2 - std::round(t * 1.2)) / 1.2 < 0.002);
  }
  CHECK(interior == 47);
}

TEST_CASE("flat input has no beats") {
  CHECK(vitals::detect_beats(std::vector<double>(1200, 0.0), 30.0, 72.0).beat_times.empty());
}

TEST_CASE("beat matching") {
  std::vector<double> ref;
  for (int k = 0; k < 100; ++k) ref.push_back(0.5 + k / 1.2);
  const auto r = vitals::make_beat_train(ref);
  const auto same = vitals::match_beats(r, r, 72.0);
  CHECK(same.rmse_ms == 0.0);
  CHECK(same.missing_pct == 0.0);

  std::vector<double> gaps;
  for (std::size_t k = 0; k < ref.size(); ++k)
    if (k % 10 != 9) gaps.push_back(ref[k]);
  CHECK(vitals::match_beats(vitals::make_beat_train(gaps), r, 72.0).missing_pct == doctest::Approx(10.0));

  // Uniform(-10, 10) ms per beat: IBI error std is sqrt(2) * 5.77 = 8.2 ms.
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-0.010, 0.010);
  std::vector<double> jit;
  for (double b : ref) jit.push_back(b + u(rng));
  const auto m = vitals::match_beats(vitals::make_beat_train(jit), r, 72.0);
  CHECK(m.rmse_ms >= 8.0);
  CHECK(m.rmse_ms <= 20.0);
  CHECK(m.missing_pct == 0.0);
}

TEST_CASE("projection SNR: caps, constructed noise and scale invariance") {
  const auto z = test::tone(1.0, 30.0, 300);
  std::vector<double> k3(z), orth(300);
  for (auto& v : k3) v *= 3.0;
  CHECK(vitals::snr_core(k3, z).snr_db == vitals::kSnrCapDb);
  CHECK(vitals::snr_core(k3, z).scale_ratio == doctest::Approx(3.0));
  for (std::size_t i = 0; i < 300; ++i) orth[i] = std::cos(2 * pi * 1.0 * i / 30.0);
  CHECK(vitals::snr_core(orth, z).snr_db == -vitals::kSnrCapDb);

  // Noise orthogonal to z with a tenth of its energy.
  const auto c = test::tone(2.0, 30.0, 300, 1.0, 0.7);
  double zz = 0, cz = 0, cc = 0;
  for (std::size_t i = 0; i < 300; ++i) zz += z[i] * z[i], cz += c[i] * z[i];
  std::vector<double> n(300), k(300);
  for (std::size_t i = 0; i < 300; ++i) n[i] = c[i] - cz / zz * z[i];
  for (double v : n) cc += v * v;
  for (std::size_t i = 0; i < 300; ++i) k[i] = z[i] + n[i] * std::sqrt(zz / 10.0 / cc);
  const double db = vitals::snr_core(k, z).snr_db;
  CHECK(db == doctest::Approx(10.0).epsilon(0.01));

  std::vector<double> k7(k), z5(z);
  for (auto& v : k7) v *= 7.0;
  for (auto& v : z5) v *= 0.2;
  CHECK(std::abs(vitals::snr_core(k7, z).snr_db - db) < 1e-9);
  CHECK(std::abs(vitals::snr(k, z5, 30.0, 30.0).snr_db - vitals::snr(k, z, 30.0, 30.0).snr_db) < 1e-9);
}

TEST_CASE("SNR aligns a delayed reference") {
  std::vector<double> z(400), k(400);
  for (std::size_t i = 0; i < 400; ++i) {
    const double t = i / 30.0;
    z[i] = std::sin(2 * pi * 1.1 * t) + 0.4 * std::sin(2 * pi * 2.2 * t + 0.5);
    k[i] = std::sin(2 * pi * 1.1 * (t - 0.2)) + 0.4 * std::sin(2 * pi * 2.2 * (t - 0.2) + 0.5);
  }
  const auto r = vitals::snr(k, z, 30.0, 30.0, 1.0);
  CHECK(r.lag_samples == 6);
  CHECK(r.snr_db > 40.0);
}

TEST_CASE("Bland-Altman") {
  std::vector<double> ref(200), est(200);
  for (std::size_t i = 0; i < 200; ++i) ref[i] = 60 + 0.1 * i;
  auto a = vitals::bland_altman(ref, ref);
  CHECK(a.mean_bias == 0.0);
  CHECK(a.loa_low == 0.0);
  CHECK(a.loa_high == 0.0);
  for (std::size_t i = 0; i < 200; ++i) est[i] = ref[i] + 1.0;
  a = vitals::bland_altman(est, ref);
  CHECK(a.mean_bias == doctest::Approx(1.0));
  CHECK(a.loa_low == doctest::Approx(1.0));
  CHECK(a.loa_high == doctest::Approx(1.0));

  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 1.0);
  for (std::size_t i = 0; i < 200; ++i) est[i] = ref[i] + n(rng);
  a = vitals::bland_altman(est, ref);
  CHECK(std::abs(a.mean_bias) <= 0.2);
  CHECK(a.loa_high - a.loa_low >= 3.3);
  CHECK(a.loa_high - a.loa_low <= 4.6);

  est[3] += 50.0;
  const auto rep = vitals::bland_altman_report(est, ref, 30.0);
  CHECK(rep.outliers == 1);
  REQUIRE(rep.filtered);
  CHECK(rep.filtered->n == 199);
}

TEST_CASE("Spearman with ties") {
  const std::vector<double> a{1, 2, 2, 3}, b{1, 3, 2, 4};
  // Pearson of average ranks {1, 2.5, 2.5, 4} and {1, 3, 2, 4}.
  CHECK(vitals::spearman(a, b) == doctest::Approx(4.5 / std::sqrt(22.5)));
  const std::vector<double> c{5, 4, 3, 2}, d{0.1, 0.2, 0.3, 10};
  CHECK(vitals::spearman(c, d) == doctest::Approx(-1.0));
  CHECK(vitals::spearman(d, d) == doctest::Approx(1.0));
}
