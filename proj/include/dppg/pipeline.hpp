#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dppg/dsp.hpp"
#include "dppg/frameio.hpp"
#include "dppg/image.hpp"
#include "dppg/mrc.hpp"
#include "dppg/tracking.hpp"

namespace dppg::pipeline {

struct EstimateConfig {
  tracking::TrackingConfig tracking;
  mrc::MrcConfig mrc;
  dsp::BandpassSpec bandpass;  // fs is taken from the frame sequence
  int block = 20;
  std::size_t min_epoch_frames = 64;  // a shorter tail joins the previous epoch
  int baseline_search_px = 3;         // face_average: search radius on the decimated frame
};

/// [start, end) frame ranges of the epochs covering n frames.
std::vector<std::pair<std::size_t, std::size_t>> epoch_bounds(std::size_t n, double fps, double epoch_seconds,
                                                              std::size_t min_epoch_frames);

struct RoiRecord {
  int roi_id = 0;
  int region_index = 0;
  double goodness = 0.0;  // before the floor gate, 0 when gated earlier
  double weight = 0.0;    // as used by the combiner
  double amp_range = 0.0;
  mrc::GateReason gate = mrc::GateReason::none;
  std::vector<double> filtered;  // empty when tracking failed
};

struct RegionRecord {
  std::string label;
  tracking::RegionStatus status = tracking::RegionStatus::tracked;
  tracking::RejectReason reason = tracking::RejectReason::none;
  std::size_t rejected_at = 0;
  Affine cumulative;  // epoch start -> epoch end
  std::size_t live_features = 0;
};

struct EpochReport {
  std::size_t epoch_index = 0;
  std::size_t start_frame = 0;
  std::size_t end_frame = 0;
  std::optional<double> coarse_pr_bpm;
  bool weights_fallback = false;
  bool has_estimate = false;
  std::size_t contributing = 0;
  std::vector<RoiRecord> rois;
  std::vector<RegionRecord> regions;
  int shift_x = 0, shift_y = 0;  // face_average: shift at the epoch's last frame
};

struct EstimateResult {
  std::string estimator;
  double fps = 0.0;
  std::vector<double> ppg;        // one sample per frame, 0 where no estimate
  std::vector<std::size_t> epoch; // epoch index per frame
  std::vector<bool> valid;
  std::vector<EpochReport> epochs;
  std::vector<std::string> warnings;
};

/// Region tracking, per-ROI averaging, gating and goodness-weighted combining
/// per epoch. Throws DegenerateError when no epoch yields an estimate.
EstimateResult estimate_distanceppg(const FrameSequence& seq, const RegionFile& regions, const EstimateConfig& cfg);

/// Whole-face baseline: mean over the union of the region polygons, moved by
/// an integer shift from normalised cross-correlation on 2x decimated frames,
/// bandpassed and scaled to unit RMS.
EstimateResult estimate_face_average(const FrameSequence& seq, const RegionFile& regions, const EstimateConfig& cfg);

/// Integer shift (dx, dy) of `frame` against `tmpl`, both decimated, that
/// maximises NCC over the template rectangle, searched within +-radius of
/// `guess`.
std::pair<int, int> ncc_shift(const FloatImage& tmpl, const FloatImage& frame, int x0, int y0, int w, int h,
                              std::pair<int, int> guess, int radius);

FloatImage decimate2(const GrayImage& img);

}  // namespace dppg::pipeline
