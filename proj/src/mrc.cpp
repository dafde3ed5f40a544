#include "dppg/mrc.hpp"

#include <algorithm>
#include <cmath>

#include "dppg/image.hpp"

namespace dppg::mrc {

const char* to_string(GateReason r) {
  switch (r) {
    case GateReason::none: return "none";
    case GateReason::amplitude: return "amplitude";
    case GateReason::floor: return "floor";
    case GateReason::tracking: return "tracking";
  }
  return "unknown";
}

RoiChannel make_channel(int roi_id, std::vector<double> filtered) {
  RoiChannel ch;
  ch.roi_id = roi_id;
  if (!filtered.empty()) {
    const auto [lo, hi] = std::minmax_element(filtered.begin(), filtered.end());
    ch.amp_range = *hi - *lo;
  }
  ch.filtered = std::move(filtered);
  return ch;
}

RoiChannel amplitude_gate(RoiChannel ch, double a_th) {
  if (!ch.gated && ch.amp_range >= a_th) {
    ch.gated = true;
    ch.reason = GateReason::amplitude;
  }
  return ch;
}

void PrHistory::push(double bpm) {
  values_.push_back(bpm);
  while (values_.size() > capacity_) values_.pop_front();
}

double PrHistory::median() const {
  if (values_.empty()) throw DegenerateError("median of empty PR history");
  std::vector<double> v(values_.begin(), values_.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::optional<double> coarse_pr(std::span<const RoiChannel> channels, double fs, PrHistory& hist,
                                const MrcConfig& cfg) {
  std::vector<double> sum;
  for (const auto& ch : channels) {
    if (ch.gated) continue;
    if (sum.empty()) sum.assign(ch.filtered.size(), 0.0);
    if (ch.filtered.size() != sum.size()) throw InputError("coarse_pr: channels differ in length");
    for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += ch.filtered[k];
  }
  if (sum.empty() || dsp::rms(sum) == 0.0) return std::nullopt;

  const dsp::Psd p = dsp::psd(sum, fs, dsp::Window::hamming);
  double pr = 60.0 * p.freqs[p.argmax(cfg.band_low_hz, cfg.band_high_hz)];
  if (!hist.empty()) {
    const double med = hist.median();
    if (std::abs(pr - med) > cfg.pr_jump_bpm) pr = med;
  }
  hist.push(pr);
  return pr;
}

double goodness_from_psd(const dsp::Psd& p, double pr_bpm, double b_hz, const MrcConfig& cfg) {
  const double f = pr_bpm / 60.0;
  const double lo = std::max(cfg.band_low_hz, f - b_hz);
  const double hi = std::min(cfg.band_high_hz, f + b_hz);
  const double total = p.band_power(cfg.band_low_hz, cfg.band_high_hz);
  if (!(total > 0.0)) return 0.0;
  const double sig = hi > lo ? p.band_power(lo, hi) : 0.0;
  const double noise = std::max(total - sig, cfg.denominator_floor * total);
  return std::min(sig / noise, cfg.goodness_cap);
}

double goodness(const RoiChannel& ch, double pr_bpm, double b_hz, double fs, const MrcConfig& cfg) {
  return goodness_from_psd(dsp::psd(ch.filtered, fs, dsp::Window::hamming), pr_bpm, b_hz, cfg);
}

namespace {

GoodnessWeights empty_weights(std::span<const RoiChannel> channels, double pr_bpm, const MrcConfig& cfg) {
  GoodnessWeights w;
  w.pr_used_hz = pr_bpm / 60.0;
  w.band_halfwidth_hz = cfg.pr_band_halfwidth_hz;
  w.roi_ids.reserve(channels.size());
  for (const auto& ch : channels) w.roi_ids.push_back(ch.roi_id);
  w.g.assign(channels.size(), 0.0);
  return w;
}

}  // namespace

GoodnessWeights compute_weights(std::span<const RoiChannel> channels, double pr_bpm, double fs,
                                const MrcConfig& cfg) {
  GoodnessWeights w = empty_weights(channels, pr_bpm, cfg);
  const auto n = static_cast<std::ptrdiff_t>(channels.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& ch = channels[static_cast<std::size_t>(i)];
    if (!ch.gated) w.g[static_cast<std::size_t>(i)] = goodness(ch, pr_bpm, cfg.pr_band_halfwidth_hz, fs, cfg);
  }
  return w;
}

GoodnessWeights compute_weights_serial(std::span<const RoiChannel> channels, double pr_bpm, double fs,
                                       const MrcConfig& cfg) {
  GoodnessWeights w = empty_weights(channels, pr_bpm, cfg);
  for (std::size_t i = 0; i < channels.size(); ++i)
    if (!channels[i].gated) w.g[i] = goodness(channels[i], pr_bpm, cfg.pr_band_halfwidth_hz, fs, cfg);
  return w;
}

GoodnessWeights floor_gate(GoodnessWeights w, double floor) {
  for (double& g : w.g)
    if (g < floor) g = 0.0;
  return w;
}

std::optional<PpgEstimate> combine(std::span<const RoiChannel> channels, const GoodnessWeights& weights) {
  if (weights.g.size() != channels.size()) throw InputError("combine: weights and channels differ in count");
  std::vector<double> out;
  std::size_t used = 0;
  for (std::size_t i = 0; i < channels.size(); ++i) {
    const auto& ch = channels[i];
    if (weights.roi_ids[i] != ch.roi_id) throw InputError("combine: weights not aligned with channels");
    const double g = weights.g[i];
    if (ch.gated || !(g > 0.0)) continue;
    if (out.empty()) out.assign(ch.filtered.size(), 0.0);
    if (ch.filtered.size() != out.size()) throw InputError("combine: channels differ in length");
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += g * ch.filtered[k];
    ++used;
  }
  if (used == 0) return std::nullopt;
  const double m = dsp::mean(out);
  for (double& v : out) v -= m;
  const double r = dsp::rms(out);
  if (!(r > 0.0)) return std::nullopt;
  for (double& v : out) v /= r;
  PpgEstimate est;
  est.samples = std::move(out);
  est.contributing_roi_count = used;
  return est;
}

EpochResult process_epoch(std::vector<RoiChannel> channels, double fs, PrHistory& hist,
                          const std::map<int, double>& previous, const MrcConfig& cfg) {
  EpochResult res;
  for (auto& ch : channels) ch = amplitude_gate(std::move(ch), cfg.a_th);
  res.coarse_pr_bpm = coarse_pr(channels, fs, hist, cfg);

  if (res.coarse_pr_bpm) {
    res.weights = floor_gate(compute_weights(channels, *res.coarse_pr_bpm, fs, cfg), cfg.goodness_floor);
    for (std::size_t i = 0; i < channels.size(); ++i)
      if (!channels[i].gated && res.weights.g[i] == 0.0) {
        channels[i].gated = true;
        channels[i].reason = GateReason::floor;
      }
  } else {
    res.weights_fallback = true;
    res.weights = empty_weights(channels, 0.0, cfg);
    for (std::size_t i = 0; i < channels.size(); ++i) {
      if (channels[i].gated) continue;
      if (previous.empty()) {
        res.weights.g[i] = 1.0;
      } else if (auto it = previous.find(channels[i].roi_id); it != previous.end()) {
        res.weights.g[i] = it->second;
      }
    }
  }
  res.estimate = combine(channels, res.weights);
  if (res.estimate && res.coarse_pr_bpm) res.estimate->coarse_pr_bpm = *res.coarse_pr_bpm;
  res.channels = std::move(channels);
  return res;
}

}  // namespace dppg::mrc
