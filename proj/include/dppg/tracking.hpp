#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dppg/frameio.hpp"
#include "dppg/geometry.hpp"
#include "dppg/image.hpp"
#include "dppg/roi.hpp"

namespace dppg::tracking {

struct TrackingConfig {
  double epoch_seconds = 10.0;
  std::uint64_t ransac_seed = 1;

  // Good features to track.
  int max_features = 50;
  int feature_window = 7;
  double feature_min_distance = 5.0;
  double feature_quality = 0.01;  // fraction of the strongest response kept

  // Pyramidal Lucas-Kanade.
  int klt_window = 15;
  int klt_pyramid_levels = 3;
  int klt_max_iterations = 30;
  double klt_epsilon = 0.01;          // px, convergence step
  double klt_min_eigenvalue = 1e-3;   // per-pixel, intensity^2 units

  double fb_error_px = 2.0;
  int min_features = 10;

  double ransac_eps_px = 2.0;
  double ransac_inlier_frac = 0.7;
  int ransac_iters = 20;
};

/// Feature coordinates use the continuous pixel frame: pixel (i, j) covers
/// [i, i+1) x [j, j+1), so its centre is (i + 0.5, j + 0.5).
struct FeatureSet {
  std::string region_label;
  std::vector<Point2> points;
  std::vector<bool> alive;

  std::size_t live_count() const;
};

/// Gaussian pyramid with central-difference gradients at every level.
struct Pyramid {
  std::vector<FloatImage> image, grad_x, grad_y;

  static Pyramid build(const GrayImage& frame, int levels);
  int levels() const { return static_cast<int>(image.size()); }
};

/// Smallest eigenvalue of the structure tensor over a window x window
/// neighbourhood, Gaussian-weighted (sigma = window / 4), Sobel gradients.
/// Same size as the frame; zero near borders.
FloatImage min_eigenvalue_map(const GrayImage& frame, int window);

/// Up to m corners inside `region`, strongest minimum eigenvalue first, at
/// least min_distance apart.
FeatureSet good_features(const GrayImage& frame, const Polygon& region, int m, const TrackingConfig& cfg = {});

/// Tracks live points from prev to next. Points that lose texture or leave
/// the frame come back dead. `guess`, when given, holds starting positions
/// in next (same indexing as pts).
FeatureSet klt_track(const Pyramid& prev, const Pyramid& next, const FeatureSet& pts, const TrackingConfig& cfg = {},
                     const FeatureSet* guess = nullptr);
FeatureSet klt_track_serial(const Pyramid& prev, const Pyramid& next, const FeatureSet& pts,
                            const TrackingConfig& cfg = {}, const FeatureSet* guess = nullptr);

/// Re-tracks `forward` (pts tracked prev -> next) back onto prev and kills
/// points whose round trip misses the original by more than fb_error_px.
FeatureSet forward_backward_gate(const Pyramid& prev, const Pyramid& next, const FeatureSet& original,
                                 const FeatureSet& forward, const TrackingConfig& cfg = {});

struct RansacParams {
  double eps_px = 2.0;
  double inlier_frac = 0.7;
  int iterations = 20;
};

struct RansacResult {
  Affine model;
  std::vector<bool> inliers;
  std::size_t inlier_count = 0;
  double max_inlier_residual = 0.0;
};

/// Exact affine through three correspondences; nullopt for collinear input.
std::optional<Affine> affine_from_three(std::span<const Point2, 3> src, std::span<const Point2, 3> dst);
std::optional<Affine> fit_affine_least_squares(std::span<const Point2> src, std::span<const Point2> dst);

/// Minimal-sample RANSAC. The first consensus set of maximal size wins;
/// accepted when it covers inlier_frac of the pairs, then refit on it.
std::optional<RansacResult> ransac_affine(std::span<const Point2> src, std::span<const Point2> dst,
                                          const RansacParams& params, std::mt19937_64& rng);

enum class RegionStatus { tracked, rejected };
enum class RejectReason { none, too_few_features, no_affine_model };

const char* to_string(RejectReason r);

struct RegionTrack {
  std::string label;
  Polygon initial;        // at epoch start
  Polygon polygon;        // current position
  FeatureSet anchor;      // GF0 at epoch start
  FeatureSet features;    // GF0, positions in the latest frame
  Affine cumulative;      // epoch-start frame -> latest frame
  RegionStatus status = RegionStatus::tracked;
  RejectReason reason = RejectReason::none;
  std::size_t rejected_at = 0;
  std::vector<std::size_t> roi_indices;  // into EpochState::rois
};

struct EpochState {
  std::size_t epoch_index = 0;
  std::size_t start_frame = 0;
  std::size_t frame = 0;  // frame the current positions refer to
  std::vector<RegionTrack> regions;
  std::vector<roi::Roi> rois;      // quads as defined at epoch start
  std::vector<Quad> quads;         // quads warped to `frame`
  std::shared_ptr<const Pyramid> anchor;  // epoch-start frame
  std::vector<std::string> warnings;
};

/// Frames per epoch, round(T * fps), at least 1.
std::size_t epoch_frames(double epoch_seconds, double fps);
bool is_epoch_start(std::size_t t, double epoch_seconds, double fps);

/// Defines regions and ROIs from `regions` and detects GF0 on `frame`.
EpochState begin_epoch(const GrayImage& frame, const RegionSet& regions, std::size_t start_frame,
                       std::size_t epoch_index, int block, const TrackingConfig& cfg);

/// One tracker step prev -> next: KLT, forward-backward gate, minimum-feature
/// gate, per-region RANSAC affine, warp of polygons and ROI quads.
/// Surviving points are then re-registered against the epoch-start frame and
/// the cumulative affine is refit from epoch-start to current positions, so
/// per-frame errors do not accumulate.
EpochState step_epoch(EpochState state, const Pyramid& prev, const Pyramid& next, const TrackingConfig& cfg);
EpochState step_epoch(EpochState state, const GrayImage& prev, const GrayImage& next, const TrackingConfig& cfg);

}  // namespace dppg::tracking
