#include <cmath>

#include "dppg/tracking.hpp"

namespace dppg::tracking {

const char* to_string(RejectReason r) {
  switch (r) {
    case RejectReason::none: return "none";
    case RejectReason::too_few_features: return "too_few_features";
    case RejectReason::no_affine_model: return "no_affine_model";
  }
  return "unknown";
}

std::size_t epoch_frames(double epoch_seconds, double fps) {
  const auto n = static_cast<long long>(std::llround(epoch_seconds * fps));
  return n < 1 ? 1 : static_cast<std::size_t>(n);
}

bool is_epoch_start(std::size_t t, double epoch_seconds, double fps) { return t % epoch_frames(epoch_seconds, fps) == 0; }

EpochState begin_epoch(const GrayImage& frame, const RegionSet& regions, std::size_t start_frame,
                       std::size_t epoch_index, int block, const TrackingConfig& cfg) {
  EpochState st;
  st.epoch_index = epoch_index;
  st.start_frame = start_frame;
  st.frame = start_frame;
  roi::RoiGrid grid = roi::grid_regions(regions, block);
  st.rois = std::move(grid.rois);
  st.warnings = std::move(grid.warnings);
  for (const auto& r : st.rois) st.quads.push_back(r.quad);
  st.anchor = std::make_shared<const Pyramid>(Pyramid::build(frame, cfg.klt_pyramid_levels));

  st.regions.resize(regions.regions.size());
  for (std::size_t i = 0; i < regions.regions.size(); ++i) {
    RegionTrack& rt = st.regions[i];
    rt.label = regions.regions[i].label;
    rt.polygon = regions.regions[i].polygon;
    rt.initial = rt.polygon;
    rt.features = good_features(frame, rt.polygon, cfg.max_features, cfg);
    rt.features.region_label = rt.label;
    rt.anchor = rt.features;
    if (static_cast<int>(rt.features.live_count()) < cfg.min_features) {
      rt.status = RegionStatus::rejected;
      rt.reason = RejectReason::too_few_features;
      rt.rejected_at = start_frame;
    }
  }
  for (std::size_t k = 0; k < st.rois.size(); ++k)
    st.regions[static_cast<std::size_t>(st.rois[k].region_index)].roi_indices.push_back(k);
  return st;
}

namespace {

void reject(RegionTrack& rt, RejectReason why) {
  rt.status = RegionStatus::rejected;
  rt.reason = why;
}

void step_region(RegionTrack& rt, std::vector<Quad>& quads, const std::vector<roi::Roi>& rois, const Pyramid& anchor,
                 const Pyramid& prev, const Pyramid& next, const TrackingConfig& cfg, std::uint64_t seed) {
  const FeatureSet fwd = klt_track(prev, next, rt.features, cfg);
  FeatureSet gated = forward_backward_gate(prev, next, rt.features, fwd, cfg);
  if (static_cast<int>(gated.live_count()) < cfg.min_features) {
    rt.features = std::move(gated);
    return reject(rt, RejectReason::too_few_features);
  }
  std::vector<Point2> src, dst;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < gated.points.size(); ++i)
    if (gated.alive[i]) {
      src.push_back(rt.features.points[i]);
      dst.push_back(gated.points[i]);
      idx.push_back(i);
    }
  std::mt19937_64 rng(seed);
  const auto fit = ransac_affine(src, dst, {cfg.ransac_eps_px, cfg.ransac_inlier_frac, cfg.ransac_iters}, rng);
  if (!fit) {
    rt.features = std::move(gated);
    return reject(rt, RejectReason::no_affine_model);
  }
  // RANSAC outliers stop being tracked.
  for (std::size_t k = 0; k < idx.size(); ++k)
    if (!fit->inliers[k]) gated.alive[idx[k]] = false;

  // Re-register against the epoch-start frame, starting from the tracked position.
  FeatureSet refined = klt_track(anchor, next, rt.anchor, cfg, &gated);
  for (std::size_t i = 0; i < refined.points.size(); ++i)
    if (refined.alive[i] && distance(refined.points[i], gated.points[i]) > cfg.fb_error_px) refined.alive[i] = false;
  rt.features = std::move(refined);
  if (static_cast<int>(rt.features.live_count()) < cfg.min_features) return reject(rt, RejectReason::too_few_features);

  src.clear();
  dst.clear();
  for (std::size_t i = 0; i < rt.features.points.size(); ++i)
    if (rt.features.alive[i]) {
      src.push_back(rt.anchor.points[i]);
      dst.push_back(rt.features.points[i]);
    }
  const auto cumulative = fit_affine_least_squares(src, dst);
  if (!cumulative) return reject(rt, RejectReason::no_affine_model);
  rt.cumulative = *cumulative;
  rt.polygon = warp(rt.initial, rt.cumulative);
  for (std::size_t q : rt.roi_indices) quads[q] = warp(rois[q].quad, rt.cumulative);
}

std::uint64_t region_seed(std::uint64_t base, std::size_t epoch, std::size_t frame, std::size_t region) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(frame),
                    static_cast<std::uint32_t>(region)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

}  // namespace

EpochState step_epoch(EpochState st, const Pyramid& prev, const Pyramid& next, const TrackingConfig& cfg) {
  const std::size_t t = st.frame + 1;
  const auto n = static_cast<std::ptrdiff_t>(st.regions.size());
  // Regions touch disjoint quads, so they can step concurrently.
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    RegionTrack& rt = st.regions[static_cast<std::size_t>(i)];
    if (rt.status == RegionStatus::rejected) continue;
    step_region(rt, st.quads, st.rois, st.anchor ? *st.anchor : prev, prev, next, cfg, region_seed(cfg.ransac_seed, st.epoch_index, t, static_cast<std::size_t>(i)));
    if (rt.status == RegionStatus::rejected) rt.rejected_at = t;
  }
  st.frame = t;
  return st;
}

EpochState step_epoch(EpochState st, const GrayImage& prev, const GrayImage& next, const TrackingConfig& cfg) {
  return step_epoch(std::move(st), Pyramid::build(prev, cfg.klt_pyramid_levels),
                    Pyramid::build(next, cfg.klt_pyramid_levels), cfg);
}

}  // namespace dppg::tracking
