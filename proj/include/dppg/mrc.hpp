#pragma once

#include <deque>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "dppg/dsp.hpp"

namespace dppg::mrc {

struct MrcConfig {
  double a_th = 8.0;                  // intensity units, peak-to-peak
  double goodness_floor = 0.25;
  double pr_band_halfwidth_hz = 0.2;
  double pr_jump_bpm = 24.0;
  double goodness_cap = 1e6;
  double denominator_floor = 1e-12;   // relative to total band power
  std::size_t history_length = 4;
  double band_low_hz = 0.5;
  double band_high_hz = 5.0;
};

enum class GateReason { none, amplitude, floor, tracking };
const char* to_string(GateReason r);

struct RoiChannel {
  int roi_id = 0;
  std::vector<double> filtered;
  double amp_range = 0.0;
  bool gated = false;
  GateReason reason = GateReason::none;
};

/// Channel from a bandpassed trace; amp_range is max - min.
RoiChannel make_channel(int roi_id, std::vector<double> filtered);

/// Gates the channel when its range reaches a_th. Already gated channels keep
/// their original reason.
RoiChannel amplitude_gate(RoiChannel ch, double a_th);

class PrHistory {
 public:
  explicit PrHistory(std::size_t capacity = 4) : capacity_(capacity) {}
  void push(double bpm);
  bool empty() const { return values_.empty(); }
  std::size_t size() const { return values_.size(); }
  double median() const;
  const std::deque<double>& values() const { return values_; }

 private:
  std::size_t capacity_;
  std::deque<double> values_;
};

/// Unit-weight PR estimate in bpm from the ungated channels, replaced by the
/// history median when it jumps by more than pr_jump_bpm. The returned value
/// is pushed onto the history. nullopt when no channel is usable.
std::optional<double> coarse_pr(std::span<const RoiChannel> channels, double fs, PrHistory& hist,
                                const MrcConfig& cfg = {});

/// Power within pr +- b over the power in the rest of [band_low, band_high].
double goodness_from_psd(const dsp::Psd& p, double pr_bpm, double b_hz, const MrcConfig& cfg = {});
double goodness(const RoiChannel& ch, double pr_bpm, double b_hz, double fs, const MrcConfig& cfg = {});

struct GoodnessWeights {
  std::vector<int> roi_ids;
  std::vector<double> g;
  double pr_used_hz = 0.0;
  double band_halfwidth_hz = 0.0;
};

/// Goodness of every channel (0 for gated ones). OpenMP over channels.
GoodnessWeights compute_weights(std::span<const RoiChannel> channels, double pr_bpm, double fs,
                                const MrcConfig& cfg = {});
GoodnessWeights compute_weights_serial(std::span<const RoiChannel> channels, double pr_bpm, double fs,
                                       const MrcConfig& cfg = {});

/// Zeroes weights strictly below `floor`.
GoodnessWeights floor_gate(GoodnessWeights w, double floor);

struct PpgEstimate {
  std::size_t epoch_index = 0;
  std::vector<double> samples;
  std::size_t contributing_roi_count = 0;
  double coarse_pr_bpm = 0.0;
};

/// Weighted sum of ungated channels, mean removed and scaled to unit RMS.
/// nullopt when no channel carries positive weight.
std::optional<PpgEstimate> combine(std::span<const RoiChannel> channels, const GoodnessWeights& weights);

struct EpochResult {
  std::optional<PpgEstimate> estimate;
  GoodnessWeights weights;      // after gating
  std::vector<RoiChannel> channels;
  std::optional<double> coarse_pr_bpm;
  bool weights_fallback = false;  // coarse PR unavailable
};

/// One epoch of the combiner: amplitude gate, coarse PR, goodness, floor
/// gate, combine. `previous` maps roi id to the last epoch's weight and is
/// used when no coarse PR can be formed.
EpochResult process_epoch(std::vector<RoiChannel> channels, double fs, PrHistory& hist,
                          const std::map<int, double>& previous, const MrcConfig& cfg = {});

}  // namespace dppg::mrc
