#include "dppg/evaluate.hpp"

#include <algorithm>
#include <cmath>

namespace dppg::eval {

Series from_result(const pipeline::EstimateResult& r) { return {r.fps, r.ppg, r.epoch, r.valid}; }

std::vector<double> reference_on_grid(const GroundTruth& truth, double fs, std::size_t n,
                                      const dsp::BandpassSpec& band) {
  std::vector<double> times(n);
  for (std::size_t i = 0; i < n; ++i) times[i] = static_cast<double>(i) / fs - truth.start_time;
  dsp::BandpassSpec b = band;
  b.fs = fs;
  return dsp::bandpass_zero_phase(dsp::spline_at(truth.samples, truth.sample_rate, times), b);
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<double> trimmed(const std::vector<double>& beats, double lo, double hi) {
  std::vector<double> out;
  for (double b : beats)
    if (b >= lo && b <= hi) out.push_back(b);
  return out;
}

}  // namespace

Evaluation evaluate(const Series& est, const GroundTruth& truth, const std::vector<double>& ref_beats,
                    const EvalOptions& opt) {
  const std::size_t n = est.values.size();
  if (n < 2 || !(est.fs > 0.0)) throw InputError("evaluate: empty estimate");
  if (est.epoch.size() != n || est.valid.size() != n) throw InputError("evaluate: estimate columns differ in length");
  const double est_span = static_cast<double>(n - 1) / est.fs;
  const double truth_end = truth.start_time + truth.duration();
  const double overlap = std::min(est_span, truth_end) - std::max(0.0, truth.start_time);
  if (!(overlap > 0.0)) throw InputError("evaluate: estimate and truth spans are disjoint");
  const double longer = std::max(est_span, truth.duration());
  if (std::abs(est_span - truth.duration()) > 0.1 * longer || overlap < 0.9 * longer)
    throw InputError("evaluate: estimate and truth spans differ by more than 10%");

  Evaluation ev;
  const std::vector<double> z = reference_on_grid(truth, est.fs, n, opt.band);
  std::vector<double> times(n);
  for (std::size_t i = 0; i < n; ++i) times[i] = static_cast<double>(i) / est.fs - truth.start_time;
  const std::vector<double> z_raw = dsp::spline_at(truth.samples, truth.sample_rate, times);
  dsp::BandpassSpec band = opt.band;
  band.fs = est.fs;

  double sum_db = 0.0;
  std::size_t valid_epochs = 0;
  for (std::size_t s = 0; s < n;) {
    std::size_t e = s;
    while (e < n && est.epoch[e] == est.epoch[s]) ++e;
    EpochSnr es;
    es.epoch = est.epoch[s];
    es.start_s = static_cast<double>(s) / est.fs;
    es.end_s = static_cast<double>(e) / est.fs;
    es.valid = std::all_of(est.valid.begin() + static_cast<std::ptrdiff_t>(s),
                           est.valid.begin() + static_cast<std::ptrdiff_t>(e), [](bool v) { return v; });
    if (es.valid) {
      // The reference goes through the same per-epoch filtering as the estimate.
      const std::vector<double> zz = dsp::bandpass_zero_phase(
          std::span<const double>(z_raw.data() + s, e - s), band);
      const std::span<const double> k(est.values.data() + s, e - s);
      es.snr = vitals::snr(k, zz, est.fs, est.fs, opt.max_lag_s);
      sum_db += es.snr.snr_db;
      ++valid_epochs;
    }
    ev.snr.push_back(es);
    s = e;
  }
  ev.mean_snr_db = valid_epochs ? sum_db / static_cast<double>(valid_epochs) : -vitals::kSnrCapDb;

  ev.pr_est = vitals::pulse_rate(est.values, est.fs, opt.pr);
  ev.pr_ref = vitals::pulse_rate(z, est.fs, opt.pr);
  if (ev.pr_est.pr.size() >= 2) ev.agreement = vitals::bland_altman_report(ev.pr_est.pr, ev.pr_ref.pr, opt.outlier_bpm);

  std::vector<double> est_prs, ref_prs;
  for (std::size_t i = 0; i < ev.pr_est.pr.size(); ++i) {
    if (ev.pr_est.has_peak[i]) est_prs.push_back(ev.pr_est.pr[i]);
    if (ev.pr_ref.has_peak[i]) ref_prs.push_back(ev.pr_ref.pr[i]);
  }
  const double ref_pr = median(ref_prs);
  ev.beat_pr_bpm = median(est_prs);
  if (ev.beat_pr_bpm > 0.0 && ref_pr > 0.0) {
    const double margin = opt.match_window_factor * 60.0 / ref_pr;
    const double hi = std::min(est_span, truth_end) - margin;
    const double lo = std::max(0.0, truth.start_time) + margin;
    const vitals::BeatTrain det = vitals::detect_beats(est.values, est.fs, ev.beat_pr_bpm, opt.beats);
    ev.beats_est = vitals::make_beat_train(trimmed(det.beat_times, lo - margin, hi + margin));
    ev.beats_ref = vitals::make_beat_train(trimmed(ref_beats, lo, hi));
    if (!ev.beats_ref.beat_times.empty())
      ev.match = vitals::match_beats(ev.beats_est, ev.beats_ref, ref_pr, opt.match_window_factor);
  }
  return ev;
}

std::vector<GoodnessPoint> goodness_vs_snr(const std::vector<pipeline::EpochReport>& epochs,
                                           const std::map<int, double>& amplitudes,
                                           const std::vector<double>& truth_fps, const dsp::BandpassSpec& band) {
  std::vector<GoodnessPoint> out;
  for (const auto& ep : epochs) {
    if (ep.end_frame > truth_fps.size()) throw InputError("goodness_vs_snr: truth shorter than the estimate");
    const std::vector<double> seg(truth_fps.begin() + static_cast<std::ptrdiff_t>(ep.start_frame),
                                  truth_fps.begin() + static_cast<std::ptrdiff_t>(ep.end_frame));
    const std::vector<double> p = dsp::bandpass_zero_phase(seg, band);
    for (const auto& r : ep.rois) {
      const auto it = amplitudes.find(r.roi_id);
      if (it == amplitudes.end() || !(r.goodness > 0.0) || r.filtered.size() != p.size()) continue;
      double ss = 0.0, nn = 0.0;
      for (std::size_t t = 0; t < p.size(); ++t) {
        const double s = it->second * p[t];
        ss += s * s;
        nn += (r.filtered[t] - s) * (r.filtered[t] - s);
      }
      GoodnessPoint g;
      g.epoch = ep.epoch_index;
      g.roi_id = r.roi_id;
      g.goodness = r.goodness;
      g.goodness_db = 10.0 * std::log10(r.goodness);
      g.true_snr_db = nn > 0.0 && ss > 0.0 ? 10.0 * std::log10(ss / nn) : (ss > 0.0 ? vitals::kSnrCapDb : -vitals::kSnrCapDb);
      out.push_back(g);
    }
  }
  return out;
}

}  // namespace dppg::eval
