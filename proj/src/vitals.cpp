#include "dppg/vitals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dppg/dsp.hpp"
#include "dppg/image.hpp"

namespace dppg::vitals {

PrSeries pulse_rate(std::span<const double> ppg, double fs, const PrOptions& opt) {
  const auto w = static_cast<std::size_t>(std::llround(opt.window_s * fs));
  const auto hop = static_cast<std::size_t>(std::llround(opt.hop_s * fs));
  if (w == 0 || hop == 0) throw InputError("pulse_rate: window and hop must be positive");
  if (ppg.size() < w) throw InputError("pulse_rate: signal shorter than one window");

  PrSeries out;
  for (std::size_t start = 0; start + w <= ppg.size(); start += hop) {
    std::vector<double> seg(ppg.begin() + static_cast<std::ptrdiff_t>(start),
                            ppg.begin() + static_cast<std::ptrdiff_t>(start + w));
    const double m = dsp::mean(seg);
    for (double& v : seg) v -= m;
    const dsp::Psd p = dsp::psd(seg, fs, dsp::Window::hamming);
    const bool peak = p.band_power(opt.band_low_hz, opt.band_high_hz) > 0.0;
    out.centers.push_back((static_cast<double>(start) + 0.5 * static_cast<double>(w)) / fs);
    out.pr.push_back(peak ? 60.0 * p.freqs[p.argmax(opt.band_low_hz, opt.band_high_hz)] : 0.0);
    out.has_peak.push_back(peak);
  }
  return out;
}

BeatTrain make_beat_train(std::vector<double> beat_times) {
  BeatTrain bt;
  bt.beat_times = std::move(beat_times);
  for (std::size_t i = 1; i < bt.beat_times.size(); ++i)
    bt.ibis_ms.push_back(1000.0 * (bt.beat_times[i] - bt.beat_times[i - 1]));
  return bt;
}

BeatTrain detect_beats(std::span<const double> ppg, double fs, double pr_bpm, const BeatOptions& opt) {
  if (!(pr_bpm > 0.0)) throw InputError("detect_beats: pulse rate must be positive");
  const std::vector<double> y = dsp::spline_resample(ppg, fs, opt.resample_hz);
  if (y.size() < 3) return {};

  std::vector<double> sorted = y;
  const auto q = static_cast<std::size_t>(opt.depth_percentile / 100.0 * static_cast<double>(sorted.size() - 1));
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(q), sorted.end());
  const double threshold = sorted[q];
  const double refractory = opt.refractory_factor * 60.0 / pr_bpm;
  const double dt = 1.0 / opt.resample_hz;

  struct Trough {
    double t, depth;
  };
  std::vector<Trough> kept;
  for (std::size_t i = 1; i + 1 < y.size(); ++i) {
    if (!(y[i] < y[i - 1] && y[i] <= y[i + 1] && y[i] < threshold)) continue;
    // Vertex of the parabola through the three samples.
    const double den = y[i - 1] - 2.0 * y[i] + y[i + 1];
    const double off = den > 0.0 ? 0.5 * (y[i - 1] - y[i + 1]) / den : 0.0;
    const Trough tr{(static_cast<double>(i) + off) * dt, y[i] - 0.25 * (y[i - 1] - y[i + 1]) * off};
    if (!kept.empty() && tr.t - kept.back().t < refractory) {
      if (tr.depth < kept.back().depth) kept.back() = tr;
      continue;
    }
    kept.push_back(tr);
  }
  std::vector<double> times;
  times.reserve(kept.size());
  for (const auto& k : kept) times.push_back(k.t);
  return make_beat_train(std::move(times));
}

BeatMatch match_beats(const BeatTrain& est, const BeatTrain& ref, double pr_bpm, double window_factor) {
  if (ref.beat_times.empty()) throw InputError("match_beats: empty reference");
  if (!(pr_bpm > 0.0)) throw InputError("match_beats: pulse rate must be positive");
  const double win = window_factor * 60.0 / pr_bpm;

  struct Cand {
    double d;
    std::size_t r, e;
  };
  std::vector<Cand> cands;
  for (std::size_t r = 0; r < ref.beat_times.size(); ++r) {
    const double t = ref.beat_times[r];
    auto it = std::lower_bound(est.beat_times.begin(), est.beat_times.end(), t - win);
    for (; it != est.beat_times.end() && *it <= t + win; ++it)
      cands.push_back({std::abs(*it - t), r, static_cast<std::size_t>(it - est.beat_times.begin())});
  }
  std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.d < b.d; });

  constexpr std::size_t none = static_cast<std::size_t>(-1);
  std::vector<std::size_t> ref_to_est(ref.beat_times.size(), none);
  std::vector<bool> est_used(est.beat_times.size(), false);
  for (const auto& c : cands) {
    if (ref_to_est[c.r] != none || est_used[c.e]) continue;
    ref_to_est[c.r] = c.e;
    est_used[c.e] = true;
  }

  BeatMatch m;
  double sq = 0.0;
  for (std::size_t r = 0; r < ref_to_est.size(); ++r) {
    if (ref_to_est[r] == none) continue;
    ++m.matched;
    m.pairs.emplace_back(r, ref_to_est[r]);
    if (r + 1 < ref_to_est.size() && ref_to_est[r + 1] != none) {
      const double e_ibi = est.beat_times[ref_to_est[r + 1]] - est.beat_times[ref_to_est[r]];
      const double r_ibi = ref.beat_times[r + 1] - ref.beat_times[r];
      const double err = 1000.0 * (e_ibi - r_ibi);
      sq += err * err;
      ++m.ibi_pairs;
    }
  }
  m.missing_pct = 100.0 * static_cast<double>(ref.beat_times.size() - m.matched) /
                  static_cast<double>(ref.beat_times.size());
  m.rmse_ms = m.ibi_pairs ? std::sqrt(sq / static_cast<double>(m.ibi_pairs)) : 0.0;
  return m;
}

SnrReport snr_core(std::span<const double> k, std::span<const double> z) {
  if (k.size() != z.size()) throw InputError("snr: estimate and reference differ in length");
  const double zz = std::inner_product(z.begin(), z.end(), z.begin(), 0.0);
  if (!(zz > 0.0)) throw InputError("snr: zero reference");
  const double kz = std::inner_product(k.begin(), k.end(), z.begin(), 0.0);
  const double a = kz / zz;
  double ss = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    const double s = a * z[i];
    ss += s * s;
    nn += (k[i] - s) * (k[i] - s);
  }
  SnrReport r;
  r.scale_ratio = a;
  if (nn == 0.0) {
    r.snr_db = kSnrCapDb;
  } else if (ss == 0.0) {
    r.snr_db = -kSnrCapDb;
  } else {
    r.snr_db = std::clamp(10.0 * std::log10(ss / nn), -kSnrCapDb, kSnrCapDb);
  }
  return r;
}

SnrReport snr(std::span<const double> k, std::span<const double> z, double fs_k, double fs_z, double max_lag_s) {
  if (k.empty() || z.size() < 4) throw InputError("snr: inputs too short");
  const double z_span = static_cast<double>(z.size() - 1) / fs_z;
  std::vector<double> times;
  for (std::size_t i = 0; i < k.size() && static_cast<double>(i) / fs_k <= z_span + 1e-9; ++i)
    times.push_back(static_cast<double>(i) / fs_k);
  const std::vector<double> zr = dsp::spline_at(z, fs_z, times);
  const std::size_t n = zr.size();
  const auto max_lag = static_cast<long>(std::llround(max_lag_s * fs_k));

  long best_lag = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (long lag = -max_lag; lag <= max_lag; ++lag) {
    // k[i] paired with zr[i - lag].
    const long lo = std::max(0L, lag);
    const long hi = std::min(static_cast<long>(n), static_cast<long>(n) + lag);
    if (hi - lo < 2) continue;
    double c = 0.0;
    // Unnormalised sum: shorter overlaps are not favoured.
    for (long i = lo; i < hi; ++i) c += k[static_cast<std::size_t>(i)] * zr[static_cast<std::size_t>(i - lag)];
    if (c > best) {
      best = c;
      best_lag = lag;
    }
  }
  const long lo = std::max(0L, best_lag);
  const long hi = std::min(static_cast<long>(n), static_cast<long>(n) + best_lag);
  std::vector<double> ka(k.begin() + lo, k.begin() + hi);
  std::vector<double> za(zr.begin() + (lo - best_lag), zr.begin() + (hi - best_lag));
  SnrReport r = snr_core(ka, za);
  r.lag_samples = static_cast<int>(best_lag);
  return r;
}

AgreementStats bland_altman(std::span<const double> est, std::span<const double> ref) {
  if (est.size() != ref.size()) throw InputError("bland_altman: series differ in length");
  if (est.size() < 2) throw InputError("bland_altman: need at least 2 pairs");
  const std::size_t n = est.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += est[i] - ref[i];
  AgreementStats s;
  s.n = n;
  s.mean_bias = sum / static_cast<double>(n);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = est[i] - ref[i] - s.mean_bias;
    var += d * d;
  }
  s.sd = std::sqrt(var / static_cast<double>(n - 1));
  s.loa_low = s.mean_bias - 1.96 * s.sd;
  s.loa_high = s.mean_bias + 1.96 * s.sd;
  return s;
}

AgreementReport bland_altman_report(std::span<const double> est, std::span<const double> ref, double outlier_bpm) {
  AgreementReport r;
  r.all = bland_altman(est, ref);
  std::vector<double> e, f;
  for (std::size_t i = 0; i < est.size(); ++i) {
    if (std::abs(est[i] - ref[i]) >= outlier_bpm) {
      ++r.outliers;
      continue;
    }
    e.push_back(est[i]);
    f.push_back(ref[i]);
  }
  if (e.size() >= 2) r.filtered = bland_altman(e, f);
  return r;
}

namespace {

std::vector<double> ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw InputError("spearman: need two equal series of length >= 2");
  const auto ra = ranks(a), rb = ranks(b);
  const double ma = dsp::mean(ra), mb = dsp::mean(rb);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace dppg::vitals
