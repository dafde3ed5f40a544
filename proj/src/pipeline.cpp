#include "dppg/pipeline.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "dppg/roi.hpp"

namespace dppg::pipeline {

std::vector<std::pair<std::size_t, std::size_t>> epoch_bounds(std::size_t n, double fps, double epoch_seconds,
                                                              std::size_t min_epoch_frames) {
  if (n < min_epoch_frames) throw InputError(fmt::format("sequence has {} frames, need at least {}", n, min_epoch_frames));
  const std::size_t len = tracking::epoch_frames(epoch_seconds, fps);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t s = 0; s < n; s += len) out.emplace_back(s, std::min(n, s + len));
  if (out.size() > 1 && out.back().second - out.back().first < min_epoch_frames) {
    out[out.size() - 2].second = n;
    out.pop_back();
  }
  for (const auto& [s, e] : out)
    if (e - s < min_epoch_frames)
      throw InputError(fmt::format("epoch of {} frames is shorter than {}", e - s, min_epoch_frames));
  return out;
}

namespace {

EstimateResult make_result(const FrameSequence& seq, const char* name) {
  if (seq.frames.empty()) throw InputError("empty frame sequence");
  EstimateResult r;
  r.estimator = name;
  r.fps = seq.fps;
  r.ppg.assign(seq.size(), 0.0);
  r.epoch.assign(seq.size(), 0);
  r.valid.assign(seq.size(), false);
  return r;
}

dsp::BandpassSpec bandpass_for(const EstimateConfig& cfg, double fps) {
  dsp::BandpassSpec b = cfg.bandpass;
  b.fs = fps;
  b.validate();
  return b;
}

}  // namespace

EstimateResult estimate_distanceppg(const FrameSequence& seq, const RegionFile& regions, const EstimateConfig& cfg) {
  EstimateResult res = make_result(seq, "distanceppg");
  const dsp::BandpassSpec band = bandpass_for(cfg, seq.fps);
  mrc::PrHistory history(cfg.mrc.history_length);
  std::map<int, double> previous;
  const auto bounds = epoch_bounds(seq.size(), seq.fps, cfg.tracking.epoch_seconds, cfg.min_epoch_frames);

  for (std::size_t e = 0; e < bounds.size(); ++e) {
    const auto [s, end] = bounds[e];
    const std::size_t len = end - s;
    tracking::EpochState st =
        tracking::begin_epoch(seq.frames[s], regions.at_frame(s), s, e, cfg.block, cfg.tracking);
    for (const auto& w : st.warnings) res.warnings.push_back(fmt::format("epoch {}: {}", e, w));

    const std::size_t nroi = st.rois.size();
    std::vector<std::vector<double>> traces(nroi, std::vector<double>(len, 0.0));
    std::vector<bool> sample_ok(nroi, true);
    auto sample = [&](std::size_t t) {
      const auto vals = roi::average_rois(seq.frames[t], st.quads);
      for (std::size_t k = 0; k < nroi; ++k) {
        if (vals[k]) traces[k][t - s] = *vals[k];
        else sample_ok[k] = false;
      }
    };
    sample(s);
    tracking::Pyramid prev = tracking::Pyramid::build(seq.frames[s], cfg.tracking.klt_pyramid_levels);
    for (std::size_t t = s + 1; t < end; ++t) {
      tracking::Pyramid next = tracking::Pyramid::build(seq.frames[t], cfg.tracking.klt_pyramid_levels);
      st = tracking::step_epoch(std::move(st), prev, next, cfg.tracking);
      sample(t);
      prev = std::move(next);
    }

    std::vector<mrc::RoiChannel> channels;
    channels.reserve(nroi);
    for (std::size_t k = 0; k < nroi; ++k) {
      const auto& roi = st.rois[k];
      const bool region_ok = st.regions[static_cast<std::size_t>(roi.region_index)].status ==
                             tracking::RegionStatus::tracked;
      if (region_ok && sample_ok[k]) {
        channels.push_back(mrc::make_channel(roi.id, dsp::bandpass_zero_phase(traces[k], band)));
      } else {
        mrc::RoiChannel ch;
        ch.roi_id = roi.id;
        ch.filtered.assign(len, 0.0);
        ch.gated = true;
        ch.reason = mrc::GateReason::tracking;
        channels.push_back(std::move(ch));
      }
    }
    // Goodness before the floor gate, for reporting.
    std::vector<double> raw_goodness(nroi, 0.0);

    mrc::EpochResult er = mrc::process_epoch(std::move(channels), seq.fps, history, previous, cfg.mrc);
    if (er.coarse_pr_bpm) {
      for (std::size_t k = 0; k < nroi; ++k) {
        const auto& ch = er.channels[k];
        if (ch.reason == mrc::GateReason::none || ch.reason == mrc::GateReason::floor)
          raw_goodness[k] = mrc::goodness(ch, *er.coarse_pr_bpm, cfg.mrc.pr_band_halfwidth_hz, seq.fps, cfg.mrc);
      }
      previous.clear();
      for (std::size_t k = 0; k < nroi; ++k) previous[er.weights.roi_ids[k]] = er.weights.g[k];
    }

    EpochReport rep;
    rep.epoch_index = e;
    rep.start_frame = s;
    rep.end_frame = end;
    rep.coarse_pr_bpm = er.coarse_pr_bpm;
    rep.weights_fallback = er.weights_fallback;
    for (std::size_t k = 0; k < nroi; ++k) {
      RoiRecord rr;
      rr.roi_id = st.rois[k].id;
      rr.region_index = st.rois[k].region_index;
      rr.goodness = raw_goodness[k];
      rr.weight = er.weights.g[k];
      rr.amp_range = er.channels[k].amp_range;
      rr.gate = er.channels[k].reason;
      if (rr.gate != mrc::GateReason::tracking) rr.filtered = std::move(er.channels[k].filtered);
      rep.rois.push_back(std::move(rr));
    }
    for (const auto& rt : st.regions)
      rep.regions.push_back({rt.label, rt.status, rt.reason, rt.rejected_at, rt.cumulative, rt.features.live_count()});
    if (er.estimate) {
      rep.has_estimate = true;
      rep.contributing = er.estimate->contributing_roi_count;
      for (std::size_t t = 0; t < len; ++t) {
        res.ppg[s + t] = er.estimate->samples[t];
        res.valid[s + t] = true;
      }
    } else {
      res.warnings.push_back(fmt::format("epoch {}: no ROI carried weight", e));
    }
    for (std::size_t t = s; t < end; ++t) res.epoch[t] = e;
    res.epochs.push_back(std::move(rep));
  }
  if (std::none_of(res.valid.begin(), res.valid.end(), [](bool v) { return v; }))
    throw DegenerateError("no epoch produced an estimate: no trackable regions with usable signal");
  return res;
}

// ---------------------------------------------------------------------------

FloatImage decimate2(const GrayImage& img) {
  FloatImage out(img.width / 2, img.height / 2);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      out.at(x, y) = 0.25f * (static_cast<float>(img.at(2 * x, 2 * y)) + img.at(2 * x + 1, 2 * y) +
                              img.at(2 * x, 2 * y + 1) + img.at(2 * x + 1, 2 * y + 1));
  return out;
}

std::pair<int, int> ncc_shift(const FloatImage& tmpl, const FloatImage& frame, int x0, int y0, int w, int h,
                              std::pair<int, int> guess, int radius) {
  double tm = 0.0;
  for (int y = y0; y < y0 + h; ++y)
    for (int x = x0; x < x0 + w; ++x) tm += tmpl.at(x, y);
  tm /= static_cast<double>(w) * h;
  double tv = 0.0;
  for (int y = y0; y < y0 + h; ++y)
    for (int x = x0; x < x0 + w; ++x) tv += (tmpl.at(x, y) - tm) * (tmpl.at(x, y) - tm);

  std::pair<int, int> best = guess;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int dy = guess.second - radius; dy <= guess.second + radius; ++dy)
    for (int dx = guess.first - radius; dx <= guess.first + radius; ++dx) {
      if (x0 + dx < 0 || y0 + dy < 0 || x0 + dx + w > frame.width || y0 + dy + h > frame.height) continue;
      double fm = 0.0;
      for (int y = y0; y < y0 + h; ++y)
        for (int x = x0; x < x0 + w; ++x) fm += frame.at(x + dx, y + dy);
      fm /= static_cast<double>(w) * h;
      double cross = 0.0, fv = 0.0;
      for (int y = y0; y < y0 + h; ++y)
        for (int x = x0; x < x0 + w; ++x) {
          const double a = tmpl.at(x, y) - tm, b = frame.at(x + dx, y + dy) - fm;
          cross += a * b;
          fv += b * b;
        }
      const double score = tv > 0.0 && fv > 0.0 ? cross / std::sqrt(tv * fv) : 0.0;
      if (score > best_score) {
        best_score = score;
        best = {dx, dy};
      }
    }
  return best;
}

EstimateResult estimate_face_average(const FrameSequence& seq, const RegionFile& regions, const EstimateConfig& cfg) {
  EstimateResult res = make_result(seq, "face_average");
  const dsp::BandpassSpec band = bandpass_for(cfg, seq.fps);
  const auto bounds = epoch_bounds(seq.size(), seq.fps, cfg.tracking.epoch_seconds, cfg.min_epoch_frames);

  for (std::size_t e = 0; e < bounds.size(); ++e) {
    const auto [s, end] = bounds[e];
    const RegionSet& set = regions.at_frame(s);
    std::vector<std::pair<int, int>> mask;
    BoundingBox bb{1e300, 1e300, -1e300, -1e300};
    for (int y = 0; y < seq.height; ++y)
      for (int x = 0; x < seq.width; ++x) {
        const Point2 c{x + 0.5, y + 0.5};
        const bool in = std::any_of(set.regions.begin(), set.regions.end(),
                                    [&](const LabeledPolygon& r) { return point_in_polygon(c, r.polygon); });
        if (!in) continue;
        mask.emplace_back(x, y);
        bb = {std::min(bb.min_x, c.x), std::min(bb.min_y, c.y), std::max(bb.max_x, c.x), std::max(bb.max_y, c.y)};
      }
    EpochReport rep;
    rep.epoch_index = e;
    rep.start_frame = s;
    rep.end_frame = end;
    for (std::size_t t = s; t < end; ++t) res.epoch[t] = e;
    if (mask.empty()) {
      res.warnings.push_back(fmt::format("epoch {}: face mask is empty", e));
      res.epochs.push_back(rep);
      continue;
    }

    const FloatImage tmpl = decimate2(seq.frames[s]);
    const int tx0 = std::max(0, static_cast<int>(bb.min_x) / 2), ty0 = std::max(0, static_cast<int>(bb.min_y) / 2);
    const int tx1 = std::min(tmpl.width, static_cast<int>(bb.max_x) / 2 + 1);
    const int ty1 = std::min(tmpl.height, static_cast<int>(bb.max_y) / 2 + 1);

    std::vector<double> trace(end - s, 0.0);
    std::pair<int, int> shift{0, 0};
    for (std::size_t t = s; t < end; ++t) {
      if (t > s)
        shift = ncc_shift(tmpl, decimate2(seq.frames[t]), tx0, ty0, tx1 - tx0, ty1 - ty0, shift,
                          cfg.baseline_search_px);
      const int dx = 2 * shift.first, dy = 2 * shift.second;
      double sum = 0.0;
      std::size_t count = 0;
      for (const auto& [x, y] : mask) {
        const int u = x + dx, v = y + dy;
        if (u < 0 || v < 0 || u >= seq.width || v >= seq.height) continue;
        sum += seq.frames[t].at(u, v);
        ++count;
      }
      trace[t - s] = count ? sum / static_cast<double>(count) : 0.0;
    }
    rep.shift_x = 2 * shift.first;
    rep.shift_y = 2 * shift.second;

    std::vector<double> f = dsp::bandpass_zero_phase(trace, band);
    const double m = dsp::mean(f);
    for (double& v : f) v -= m;
    const double r = dsp::rms(f);
    if (r > 0.0) {
      for (std::size_t t = 0; t < f.size(); ++t) {
        res.ppg[s + t] = f[t] / r;
        res.valid[s + t] = true;
      }
      rep.has_estimate = true;
      rep.contributing = 1;
    }
    res.epochs.push_back(std::move(rep));
  }
  if (std::none_of(res.valid.begin(), res.valid.end(), [](bool v) { return v; }))
    throw DegenerateError("face_average produced no estimate");
  return res;
}

}  // namespace dppg::pipeline
