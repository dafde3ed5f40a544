#pragma once

#include <map>
#include <vector>

#include "dppg/dsp.hpp"
#include "dppg/frameio.hpp"
#include "dppg/pipeline.hpp"
#include "dppg/vitals.hpp"

namespace dppg::eval {

/// An estimate on the frame grid, t = i / fs.
struct Series {
  double fs = 0.0;
  std::vector<double> values;
  std::vector<std::size_t> epoch;
  std::vector<bool> valid;
};

Series from_result(const pipeline::EstimateResult& r);

struct EvalOptions {
  dsp::BandpassSpec band;  // fs replaced by the estimate's rate
  double max_lag_s = 1.0;
  vitals::PrOptions pr;
  vitals::BeatOptions beats;
  double match_window_factor = 0.5;
  double outlier_bpm = 30.0;
};

struct EpochSnr {
  std::size_t epoch = 0;
  double start_s = 0.0, end_s = 0.0;
  bool valid = false;
  vitals::SnrReport snr;
};

struct Evaluation {
  std::vector<EpochSnr> snr;
  double mean_snr_db = 0.0;  // over valid epochs
  vitals::PrSeries pr_est, pr_ref;
  vitals::BeatTrain beats_est, beats_ref;
  vitals::BeatMatch match;
  double beat_pr_bpm = 0.0;  // rate used for the refractory and matching windows
  std::optional<vitals::AgreementReport> agreement;
};

/// Reference resampled onto the estimate's grid (n samples at fs) by a
/// natural spline, then bandpassed.
std::vector<double> reference_on_grid(const GroundTruth& truth, double fs, std::size_t n,
                                      const dsp::BandpassSpec& band);

/// SNR per epoch, windowed PR, beats and Bland-Altman against the truth.
/// Reference beats within half a match window of either end are ignored.
Evaluation evaluate(const Series& est, const GroundTruth& truth, const std::vector<double>& ref_beats,
                    const EvalOptions& opt = {});

struct GoodnessPoint {
  std::size_t epoch = 0;
  int roi_id = 0;
  double goodness = 0.0;
  double goodness_db = 0.0;
  double true_snr_db = 0.0;
};

/// Pairs each scored ROI's goodness with its true SNR: signal A_i times the
/// epoch's bandpassed truth, noise the remainder of the filtered trace.
/// `truth_fps` is the unfiltered pulse on the frame grid.
std::vector<GoodnessPoint> goodness_vs_snr(const std::vector<pipeline::EpochReport>& epochs,
                                           const std::map<int, double>& amplitudes,
                                           const std::vector<double>& truth_fps, const dsp::BandpassSpec& band);

}  // namespace dppg::eval
