#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace dppg::vitals {

struct PrSeries {
  std::vector<double> centers;  // seconds
  std::vector<double> pr;       // bpm
  std::vector<bool> has_peak;   // false for windows without spectral power
};

struct PrOptions {
  double window_s = 10.0;
  double hop_s = 5.0;
  double band_low_hz = 0.5;
  double band_high_hz = 5.0;
};

/// Hamming-windowed PSD argmax per window, in bpm.
PrSeries pulse_rate(std::span<const double> ppg, double fs, const PrOptions& opt = {});

struct BeatTrain {
  std::vector<double> beat_times;  // seconds
  std::vector<double> ibis_ms;
};

BeatTrain make_beat_train(std::vector<double> beat_times);

struct BeatOptions {
  double resample_hz = 500.0;
  double depth_percentile = 40.0;
  double refractory_factor = 0.5;  // times the pulse period
};

/// Troughs of the spline-resampled waveform below the depth percentile, with
/// a refractory of refractory_factor / f_PR resolved in favour of the deeper
/// minimum. Trough instants are refined by a parabola through the neighbours.
BeatTrain detect_beats(std::span<const double> ppg, double fs, double pr_bpm, const BeatOptions& opt = {});

struct BeatMatch {
  double rmse_ms = 0.0;
  double missing_pct = 0.0;
  std::size_t matched = 0;
  std::size_t ibi_pairs = 0;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (ref index, est index)
};

/// Greedy nearest-neighbour matching of reference beats to estimated beats
/// within +-window_factor / f_PR; IBI errors over consecutive matched pairs.
BeatMatch match_beats(const BeatTrain& est, const BeatTrain& ref, double pr_bpm, double window_factor = 0.5);

struct SnrReport {
  double snr_db = 0.0;
  double scale_ratio = 0.0;  // <k,z> / <z,z>
  int lag_samples = 0;       // shift applied to z, positive delays the reference
};

constexpr double kSnrCapDb = 60.0;

/// Projection SNR of k against z of equal length, capped at +-60 dB.
SnrReport snr_core(std::span<const double> k, std::span<const double> z);

/// Resamples z (rate fs_z) onto k's grid (rate fs_k, both starting at t=0),
/// aligns it by the cross-correlation peak within +-max_lag_s and evaluates
/// snr_core on the overlap.
SnrReport snr(std::span<const double> k, std::span<const double> z, double fs_k, double fs_z,
              double max_lag_s = 1.0);

struct AgreementStats {
  double mean_bias = 0.0;
  double sd = 0.0;
  double loa_low = 0.0;
  double loa_high = 0.0;
  std::size_t n = 0;
};

AgreementStats bland_altman(std::span<const double> est, std::span<const double> ref);

struct AgreementReport {
  AgreementStats all;
  std::optional<AgreementStats> filtered;  // without |error| >= outlier_bpm
  std::size_t outliers = 0;
};

AgreementReport bland_altman_report(std::span<const double> est, std::span<const double> ref,
                                    double outlier_bpm = 30.0);

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);

}  // namespace dppg::vitals
