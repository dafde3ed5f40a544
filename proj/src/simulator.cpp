#include "dppg/simulator.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "dppg/roi.hpp"

namespace dppg::sim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
  return std::mt19937_64(seq);
}

// Stream tags for independent generators derived from the scene seed.
enum : std::uint64_t { kPulse = 1, kAlpha = 2, kTexture = 3, kSurface = 4, kNoise = 5, kScript = 6 };

bool in_ellipse(Point2 p, double cx, double cy, double rx, double ry) {
  const double u = (p.x - cx) / rx, v = (p.y - cy) / ry;
  return u * u + v * v <= 1.0;
}

Polygon rect(double x0, double y0, double x1, double y1) { return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}; }

std::vector<LabeledPolygon> default_regions() {
  return {{"forehead-left", rect(100, 40, 160, 80)},
          {"forehead-right", rect(160, 40, 220, 80)},
          {"cheek-left", rect(80, 120, 140, 180)},
          {"cheek-right", rect(180, 120, 240, 180)},
          {"chin", rect(120, 200, 200, 220)}};
}

std::vector<Affine> integrate(const std::vector<MotionSegment>& script, std::size_t frames, double fps) {
  std::vector<Affine> cum(frames);
  for (std::size_t t = 1; t < frames; ++t) {
    const double time = static_cast<double>(t) / fps;
    Affine step;
    for (const auto& s : script)
      if (time >= s.t_start && time < s.t_end) step = compose(s.step, step);
    cum[t] = compose(step, cum[t - 1]);
  }
  return cum;
}

}  // namespace

// ---------------------------------------------------------------------------

std::size_t SceneSpec::frame_count() const { return static_cast<std::size_t>(std::llround(duration * fps)); }

void SceneSpec::validate() const {
  if (width < 16 || height < 16) throw InputError("scene: frame must be at least 16x16");
  if (!(fps > 0.0) || !(duration > 0.0)) throw InputError("scene: fps and duration must be positive");
  if (!(illumination.level > 0.0)) throw InputError("scene: illumination level must be positive");
  if (frame_count() < 2) throw InputError("scene: fewer than two frames");
  const double pr_end = ppg.pr_end_bpm < 0.0 ? ppg.pr_bpm : ppg.pr_end_bpm;
  if (ppg.pr_bpm < 40.0 || ppg.pr_bpm > 180.0 || pr_end < 40.0 || pr_end > 180.0)
    throw InputError("scene: pulse rate must lie in [40, 180] bpm");
  if (ppg.jitter_ms < 0.0) throw InputError("scene: negative jitter");
  if (perfusion.alpha_max < 0.0 || perfusion.cell < 1) throw InputError("scene: bad perfusion field");
  const double peak = perfusion.alpha_max * (1.0 + std::abs(ppg.h2) + std::abs(ppg.h3));
  if (peak > 0.1 * face.skin_b) throw InputError("scene: pulsatile term must stay small against reflectance");
  if (region_motion.size() > regions.size()) throw InputError("scene: motion scripts for unknown regions");
  for (const auto& b : bursts)
    if (b.region < 0 || static_cast<std::size_t>(b.region) >= regions.size())
      throw InputError("scene: burst references an unknown region");
  RegionFile rf;
  rf.sets.push_back({0, regions});
  validate_regions(rf, width, height);
}

// ---------------------------------------------------------------------------

PulseModel::PulseModel(const PpgModel& m, double duration, std::uint64_t seed) : model_(m) {
  auto rng = make_rng(seed, kPulse);
  std::normal_distribution<double> jitter(0.0, m.jitter_ms / 1000.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double pr_end = m.pr_end_bpm < 0.0 ? m.pr_bpm : m.pr_end_bpm;
  auto period_at = [&](double t) {
    const double frac = std::clamp(t / duration, 0.0, 1.0);
    return 60.0 / (m.pr_bpm + (pr_end - m.pr_bpm) * frac);
  };
  double t = -period_at(0.0) * (1.0 + u01(rng));
  beats_.push_back(t);
  while (t < duration + 2.0 * period_at(duration)) {
    const double p = period_at(t) + (m.jitter_ms > 0.0 ? jitter(rng) : 0.0);
    if (!(p > 0.0)) throw InputError("pulse model: jitter drives a beat period non-positive");
    t += p;
    beats_.push_back(t);
  }
}

double PulseModel::operator()(double t) const {
  auto it = std::upper_bound(beats_.begin(), beats_.end(), t);
  if (it == beats_.begin() || it == beats_.end()) throw InputError("pulse model: time outside the generated span");
  const double b1 = *it, b0 = *(it - 1);
  const double phi = kTwoPi * (t - b0) / (b1 - b0);
  return -(std::cos(phi) + model_.h2 * std::cos(2.0 * phi) + model_.h3 * std::cos(3.0 * phi));
}

std::vector<double> PulseModel::beats_within(double t0, double t1) const {
  std::vector<double> out;
  for (double b : beats_)
    if (b >= t0 && b <= t1) out.push_back(b);
  return out;
}

PpgTruth PulseModel::sample(double fs, double duration) const {
  PpgTruth p;
  p.fs = fs;
  const auto n = static_cast<std::size_t>(std::floor(duration * fs + 1e-9)) + 1;
  p.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) p.samples[i] = (*this)(static_cast<double>(i) / fs);
  p.beat_times = beats_within(0.0, duration);
  return p;
}

// ---------------------------------------------------------------------------

Scene::Scene(SceneSpec spec)
    : spec_(std::move(spec)),
      pulse_(spec_.ppg, static_cast<double>(spec_.frame_count()) / spec_.fps + 1.0, spec_.seed) {
  spec_.validate();
  const int w = spec_.width, h = spec_.height;
  const auto npx = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  const Face& f = spec_.face;
  alpha_.assign(npx, 0.0);
  reflect_.assign(npx, f.background_b);
  label_.assign(npx, -1);

  // Perfusion lattice, one draw per cell regardless of alpha_max so scaled
  // variants share the pattern.
  const Perfusion& pf = spec_.perfusion;
  const int cells_x = (w + pf.cell - 1) / pf.cell, cells_y = (h + pf.cell - 1) / pf.cell;
  std::vector<double> lattice(static_cast<std::size_t>(cells_x * cells_y));
  {
    auto rng = make_rng(spec_.seed, kAlpha);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (double& v : lattice) {
      const double pick = u01(rng), level = u01(rng);
      v = pick < pf.zero_fraction ? pf.zero_level : pf.min_level + (1.0 - pf.min_level) * level;
    }
  }

  // Dark facial features: eyes, pupils, brows, nostrils, mouth.
  struct Blob {
    double cx, cy, rx, ry, b;
  };
  std::vector<Blob> features;
  if (f.features) {
    const double sx = f.rx / 110.0, sy = f.ry / 120.0;
    auto at = [&](double dx, double dy, double rx, double ry, double b) {
      features.push_back({f.cx + dx * sx, f.cy + dy * sy, rx * sx, ry * sy, b});
    };
    at(-35, -37, 16, 3, 0.20);
    at(35, -37, 16, 3, 0.20);
    at(-35, -22, 14, 7, 0.15);
    at(35, -22, 14, 7, 0.15);
    at(-35, -22, 4, 4, 0.05);
    at(35, -22, 4, 4, 0.05);
    at(-10, 43, 4, 3, 0.15);
    at(10, 43, 4, 3, 0.15);
    at(0, 68, 22, 6, 0.30);
  }

  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const Point2 c{x + 0.5, y + 0.5};
      const auto k = static_cast<std::size_t>(y) * w + x;
      if (!in_ellipse(c, f.cx, f.cy, f.rx, f.ry)) continue;
      reflect_[k] = f.skin_b;
      bool skin = true;
      for (const auto& b : features)
        if (in_ellipse(c, b.cx, b.cy, b.rx, b.ry)) {
          reflect_[k] = b.b;
          skin = false;
        }
      int region = -1;
      for (std::size_t r = 0; r < spec_.regions.size(); ++r)
        if (point_in_polygon(c, spec_.regions[r].polygon)) region = static_cast<int>(r);
      label_[k] = region;
      if (!skin) continue;
      const double gain = region >= 0 && static_cast<std::size_t>(region) < pf.region_gain.size()
                              ? pf.region_gain[static_cast<std::size_t>(region)]
                              : 1.0;
      alpha_[k] = pf.alpha_max * gain * lattice[static_cast<std::size_t>((y / pf.cell) * cells_x + x / pf.cell)];
    }

  // Corner texture: small Gaussian blobs in reflectance, face only.
  {
    const Texture& tx = spec_.texture;
    auto rng = make_rng(spec_.seed, kTexture);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const auto count = static_cast<std::size_t>(tx.density * std::numbers::pi * f.rx * f.ry);
    const int reach = static_cast<int>(std::ceil(4.0 * tx.sigma));
    for (std::size_t i = 0; i < count; ++i) {
      Point2 p;
      do {
        p = {f.cx + f.rx * (2.0 * u01(rng) - 1.0), f.cy + f.ry * (2.0 * u01(rng) - 1.0)};
      } while (!in_ellipse(p, f.cx, f.cy, f.rx, f.ry));
      const double amp = (u01(rng) < 0.5 ? -1.0 : 1.0) * tx.amplitude * (0.5 + 0.5 * u01(rng));
      const int px = static_cast<int>(p.x), py = static_cast<int>(p.y);
      for (int y = std::max(0, py - reach); y <= std::min(h - 1, py + reach); ++y)
        for (int x = std::max(0, px - reach); x <= std::min(w - 1, px + reach); ++x) {
          const Point2 c{x + 0.5, y + 0.5};
          if (!in_ellipse(c, f.cx, f.cy, f.rx, f.ry)) continue;
          const double d2 = (c.x - p.x) * (c.x - p.x) + (c.y - p.y) * (c.y - p.y);
          reflect_[static_cast<std::size_t>(y) * w + x] += amp * std::exp(-0.5 * d2 / (tx.sigma * tx.sigma));
        }
    }
    for (double& r : reflect_) r = std::clamp(r, 0.02, 1.0);
  }

  // Surface disturbance nodes.
  {
    const SurfaceNoise& sn = spec_.surface;
    nodes_x_ = static_cast<int>(std::ceil(w / sn.node_spacing)) + 1;
    nodes_y_ = static_cast<int>(std::ceil(h / sn.node_spacing)) + 1;
    nodes_.resize(static_cast<std::size_t>(nodes_x_ * nodes_y_));
    auto rng = make_rng(spec_.seed, kSurface);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const int kc = std::clamp(sn.components, 1, 4);
    const double amp = sn.std * std::sqrt(2.0 / kc);
    for (auto& n : nodes_)
      for (int k = 0; k < 4; ++k) {
        n.amp[k] = k < kc ? amp : 0.0;
        n.freq[k] = 0.02 + (sn.max_freq_hz - 0.02) * u01(rng);
        n.phase[k] = kTwoPi * u01(rng);
      }
  }

  const std::size_t frames = spec_.frame_count();
  head_ = integrate(spec_.head_motion, frames, spec_.fps);
  local_.resize(spec_.regions.size());
  for (std::size_t r = 0; r < spec_.regions.size(); ++r)
    local_[r] = r < spec_.region_motion.size() && !spec_.region_motion[r].empty()
                    ? integrate(spec_.region_motion[r], frames, spec_.fps)
                    : std::vector<Affine>();
}

Affine Scene::region(std::size_t t, std::size_t r) const {
  return local_[r].empty() ? head_[t] : compose(head_[t], local_[r][t]);
}

double Scene::illumination_at(Point2 c, std::size_t t) const {
  const Illumination& il = spec_.illumination;
  double v = il.level;
  switch (il.kind) {
    case IlluminationKind::constant: break;
    case IlluminationKind::gradient: v *= 1.0 + il.gradient_per_px * (c.x - 0.5 * spec_.width); break;
    case IlluminationKind::spotlight: {
      const double d2 = (c.x - il.spot_x) * (c.x - il.spot_x) + (c.y - il.spot_y) * (c.y - il.spot_y);
      v *= il.spot_floor + (1.0 - il.spot_floor) * std::exp(-0.5 * d2 / (il.spot_sigma * il.spot_sigma));
      break;
    }
  }
  const double span = static_cast<double>(spec_.frame_count() - 1);
  const double frac = span > 0.0 ? static_cast<double>(t) / span : 0.0;
  v *= il.scale_start + (il.scale_end - il.scale_start) * frac;
  if (il.shadow_x >= 0.0) {
    const double s = 1.0 / (1.0 + std::exp(-(c.x - il.shadow_x) / il.shadow_softness));
    v *= 1.0 - (1.0 - il.shadow_factor) * s;
  }
  return v;
}

double Scene::field(const std::vector<double>& map, Point2 s) const {
  const double u = std::clamp(s.x - 0.5, 0.0, spec_.width - 1.0);
  const double v = std::clamp(s.y - 0.5, 0.0, spec_.height - 1.0);
  const int x0 = std::min(static_cast<int>(u), spec_.width - 2);
  const int y0 = std::min(static_cast<int>(v), spec_.height - 2);
  const double fx = u - x0, fy = v - y0;
  const auto k = static_cast<std::size_t>(y0) * spec_.width + x0;
  const double a = map[k], b = map[k + 1], c = map[k + spec_.width], d = map[k + spec_.width + 1];
  if (fx == 0.0 && fy == 0.0) return a;
  return (1 - fy) * ((1 - fx) * a + fx * b) + fy * ((1 - fx) * c + fx * d);
}

double Scene::alpha_at(Point2 s) const { return field(alpha_, s); }

Image<double> Scene::clean_frame(std::size_t t) const {
  const SceneSpec& sp = spec_;
  const int w = sp.width, h = sp.height;
  const double time = static_cast<double>(t) / sp.fps;
  const double p = pulse_(time);
  const Face& f = sp.face;

  // Surface node values at this instant.
  std::vector<double> node(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    double v = 0.0;
    for (int k = 0; k < 4; ++k) v += nodes_[i].amp[k] * std::sin(kTwoPi * nodes_[i].freq[k] * time + nodes_[i].phase[k]);
    node[i] = v;
  }
  auto surface = [&](Point2 s) {
    if (sp.surface.std == 0.0) return 0.0;
    const double gx = std::clamp(s.x / sp.surface.node_spacing, 0.0, nodes_x_ - 1.0001);
    const double gy = std::clamp(s.y / sp.surface.node_spacing, 0.0, nodes_y_ - 1.0001);
    const int ix = static_cast<int>(gx), iy = static_cast<int>(gy);
    const double fx = gx - ix, fy = gy - iy;
    const auto k = static_cast<std::size_t>(iy * nodes_x_ + ix);
    return (1 - fy) * ((1 - fx) * node[k] + fx * node[k + 1]) +
           fy * ((1 - fx) * node[k + nodes_x_] + fx * node[k + nodes_x_ + 1]);
  };

  std::vector<double> burst(sp.regions.size(), 0.0);
  for (const auto& b : sp.bursts)
    if (time >= b.t_start && time < b.t_end) {
      const double env = std::sin(std::numbers::pi * (time - b.t_start) / (b.t_end - b.t_start));
      burst[static_cast<std::size_t>(b.region)] += b.amplitude * env * env * std::sin(kTwoPi * b.freq_hz * (time - b.t_start));
    }

  const auto head_inv = head_[t].inverse();
  if (!head_inv) throw InputError("scene: head motion became singular");
  struct Moving {
    std::size_t region;
    Polygon poly;
    Affine inv;
  };
  std::vector<Moving> moving;
  for (std::size_t r = 0; r < sp.regions.size(); ++r) {
    if (local_[r].empty()) continue;
    const Affine m = region(t, r);
    const auto inv = m.inverse();
    if (!inv) throw InputError("scene: region motion became singular");
    moving.push_back({r, warp(sp.regions[r].polygon, m), *inv});
  }

  Image<double> out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const Point2 c{x + 0.5, y + 0.5};
      Point2 s = head_inv->apply(c);
      bool face = in_ellipse(s, f.cx, f.cy, f.rx, f.ry);
      for (const auto& m : moving)
        if (point_in_polygon(c, m.poly)) {
          s = m.inv.apply(c);
          face = true;
        }
      const double illum = illumination_at(c, t);
      double v;
      if (face) {
        v = illum * (field(alpha_, s) * p + field(reflect_, s) + surface(s) / sp.illumination.level);
        const int lx = std::clamp(static_cast<int>(s.x), 0, w - 1), ly = std::clamp(static_cast<int>(s.y), 0, h - 1);
        const int lab = label_[static_cast<std::size_t>(ly) * w + lx];
        if (lab >= 0) v += burst[static_cast<std::size_t>(lab)];
      } else {
        v = illum * f.background_b;
      }
      for (const auto& o : sp.occluders)
        if (time >= o.t_start && time < o.t_end) {
          const double df = (time - o.t_start) * sp.fps;
          const double ox = o.x + o.vx * df, oy = o.y + o.vy * df;
          if (c.x >= ox && c.x < ox + o.w && c.y >= oy && c.y < oy + o.h) v = o.intensity;
        }
      if (v < 0.0 || v > 255.0)
        throw InputError(fmt::format("scene '{}' overflows at frame {} pixel ({}, {}): {:.2f}", sp.name, t, x, y, v));
      out.at(x, y) = v;
    }
  return out;
}

Image<double> Scene::noisy_frame(std::size_t t) const {
  Image<double> img = clean_frame(t);
  if (spec_.sensor_noise_std > 0.0) {
    auto rng = make_rng(spec_.seed, kNoise, t);
    std::normal_distribution<double> n(0.0, spec_.sensor_noise_std);
    for (double& v : img.pixels) v += n(rng);
  }
  return img;
}

GrayImage Scene::frame(std::size_t t) const {
  const Image<double> img = noisy_frame(t);
  GrayImage out(img.width, img.height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    out.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::nearbyint(img.pixels[i]), 0.0, 255.0));
  return out;
}

SceneTruth Scene::truth(int block) const {
  SceneTruth tr;
  const std::size_t frames = spec_.frame_count();
  const double span = static_cast<double>(frames - 1) / spec_.fps;
  tr.ppg_fps = pulse_.sample(spec_.fps, span);
  tr.ppg_500 = pulse_.sample(500.0, span);
  tr.cumulative.resize(frames);
  for (std::size_t t = 0; t < frames; ++t)
    for (std::size_t r = 0; r < spec_.regions.size(); ++r) tr.cumulative[t].push_back(region(t, r));

  // Region sets whenever any polygon moved, as a face fitter would report.
  tr.regions.sets.push_back({0, spec_.regions});
  for (std::size_t t = 1; t < frames; ++t) {
    bool moved = false;
    for (std::size_t r = 0; r < spec_.regions.size() && !moved; ++r) {
      const Affine a = tr.cumulative[t][r], b = tr.cumulative[t - 1][r];
      moved = a.a != b.a || a.b != b.b || a.tx != b.tx || a.c != b.c || a.d != b.d || a.ty != b.ty;
    }
    if (!moved) continue;
    RegionSet set{t, {}};
    for (std::size_t r = 0; r < spec_.regions.size(); ++r)
      set.regions.push_back({spec_.regions[r].label, warp(spec_.regions[r].polygon, tr.cumulative[t][r])});
    tr.regions.sets.push_back(std::move(set));
  }

  Image<double> ia(spec_.width, spec_.height);
  for (int y = 0; y < spec_.height; ++y)
    for (int x = 0; x < spec_.width; ++x)
      ia.at(x, y) = illumination_at({x + 0.5, y + 0.5}, 0) * alpha_[static_cast<std::size_t>(y) * spec_.width + x];
  const roi::RoiGrid grid = roi::grid_regions(spec_.regions, block);
  for (const auto& r : grid.rois)
    tr.rois.push_back({r.id, r.region_label, r.quad, roi::average_roi(ia, r.quad).value_or(0.0)});
  return tr;
}

Rendered render(const SceneSpec& spec) {
  const Scene scene(spec);
  Rendered out;
  const std::size_t n = scene.spec().frame_count();
  out.frames.width = spec.width;
  out.frames.height = spec.height;
  out.frames.fps = spec.fps;
  out.frames.frames.resize(n);
  std::string error;
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(n); ++t) {
    try {
      out.frames.frames[static_cast<std::size_t>(t)] = scene.frame(static_cast<std::size_t>(t));
    } catch (const std::exception& e) {
#pragma omp critical(dppg_render_error)
      if (error.empty()) error = e.what();
    }
  }
  if (!error.empty()) throw InputError(error);
  out.truth = scene.truth();
  return out;
}

// ---------------------------------------------------------------------------

namespace {

SceneSpec base_scene(const std::string& name, std::uint64_t seed) {
  SceneSpec s;
  s.name = name;
  s.seed = seed;
  s.regions = default_regions();
  return s;
}

SceneSpec static_fair(std::uint64_t seed) {
  SceneSpec s = base_scene("static_fair", seed);
  s.illumination.kind = IlluminationKind::spotlight;
  s.illumination.level = 230.0;
  s.illumination.spot_x = 120.0;
  s.illumination.spot_y = 110.0;
  s.illumination.spot_sigma = 55.0;
  s.illumination.spot_floor = 0.15;
  s.perfusion.alpha_max = 0.008;
  s.perfusion.zero_fraction = 0.4;
  s.perfusion.min_level = 0.1;
  s.perfusion.region_gain = {1.0, 0.6, 1.3, 0.5, 0.4};
  s.surface.std = 1.0;
  s.surface.max_freq_hz = 0.25;
  s.sensor_noise_std = 4.0;
  s.ppg.jitter_ms = 30.0;
  return s;
}

std::vector<MotionSegment> reading_script(std::uint64_t seed, double duration, double fps) {
  auto rng = make_rng(seed, kScript);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<MotionSegment> script;
  double t = 1.0, x = 0.0, y = 0.0;
  while (t < duration) {
    const double len = 0.4 + 0.8 * u01(rng);
    double vx = 0.0, vy = 0.0;
    if (u01(rng) > 0.3) {
      vx = (2.0 * u01(rng) - 1.0) * 2.5;
      vy = (2.0 * u01(rng) - 1.0) * 0.5;
    }
    const double frames = len * fps;
    if (std::abs(x + vx * frames) > 35.0) vx = -vx;
    if (std::abs(y + vy * frames) > 8.0) vy = -vy;
    vx = (std::clamp(x + vx * frames, -35.0, 35.0) - x) / frames;
    vy = (std::clamp(y + vy * frames, -8.0, 8.0) - y) / frames;
    x += vx * frames;
    y += vy * frames;
    script.push_back({t, t + len, Affine::translation(vx, vy)});
    t += len;
  }
  return script;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"static_fair", "static_dark", "lux_sweep", "reading", "talking_hard", "static_uniform"};
}

SceneSpec preset(const std::string& name, std::uint64_t seed) {
  auto pick = [&](std::uint64_t own) { return seed ? seed : own; };
  if (name == "static_fair") return static_fair(pick(11));
  if (name == "static_dark") {
    SceneSpec s = static_fair(pick(11));
    s.name = name;
    s.perfusion.alpha_max *= 0.25;
    return s;
  }
  if (name == "static_uniform") {
    SceneSpec s = static_fair(pick(11));
    s.name = name;
    s.illumination.kind = IlluminationKind::constant;
    s.illumination.level = 200.0;
    s.perfusion.zero_fraction = 0.0;
    s.perfusion.min_level = 1.0;
    s.perfusion.region_gain.clear();
    return s;
  }
  if (name == "lux_sweep") {
    SceneSpec s = static_fair(pick(21));
    s.name = name;
    s.illumination.spot_sigma = 90.0;
    s.illumination.spot_floor = 0.6;
    s.illumination.scale_start = 0.5;
    s.illumination.scale_end = 1.0;
    return s;
  }
  if (name == "reading") {
    SceneSpec s = base_scene(name, pick(31));
    s.illumination.kind = IlluminationKind::constant;
    s.illumination.level = 200.0;
    s.illumination.shadow_x = 200.0;
    s.illumination.shadow_factor = 0.6;
    s.perfusion.alpha_max = 0.006;
    s.perfusion.zero_fraction = 0.2;
    s.surface.std = 1.0;
    s.surface.max_freq_hz = 0.25;
    s.sensor_noise_std = 4.0;
    s.ppg.pr_bpm = 66.0;
    s.ppg.pr_end_bpm = 78.0;
    s.ppg.jitter_ms = 20.0;
    s.head_motion = reading_script(s.seed, s.duration, s.fps);
    s.recommended_epoch_seconds = 5.0;
    return s;
  }
  if (name == "talking_hard") {
    SceneSpec s = base_scene(name, pick(41));
    s.illumination.kind = IlluminationKind::spotlight;
    s.illumination.level = 220.0;
    s.illumination.spot_x = 160.0;
    s.illumination.spot_y = 100.0;
    s.illumination.spot_sigma = 110.0;
    s.illumination.spot_floor = 0.5;
    s.perfusion.alpha_max = 0.002;
    s.perfusion.zero_fraction = 0.3;
    s.surface.std = 2.0;
    s.surface.max_freq_hz = 0.4;
    s.sensor_noise_std = 6.0;
    s.ppg.pr_bpm = 84.0;
    s.ppg.jitter_ms = 30.0;
    s.recommended_epoch_seconds = 5.0;
    auto rng = make_rng(s.seed, kScript);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    // Jaw and cheeks move against each other while the head sways.
    s.region_motion.resize(s.regions.size());
    for (double t = 0.5; t < s.duration; t += 0.5) {
      const double jaw = (u01(rng) < 0.5 ? -1.0 : 1.0) * (0.8 + 0.8 * u01(rng));
      s.region_motion[4].push_back({t, t + 0.25, Affine::translation(0.0, jaw)});
      s.region_motion[4].push_back({t + 0.25, t + 0.5, Affine::translation(0.0, -jaw)});
      const double cheek = 0.6 * (2.0 * u01(rng) - 1.0);
      s.region_motion[2].push_back({t, t + 0.25, Affine::translation(cheek, -0.5 * jaw)});
      s.region_motion[2].push_back({t + 0.25, t + 0.5, Affine::translation(-cheek, 0.5 * jaw)});
      s.region_motion[3].push_back({t, t + 0.25, Affine::translation(-cheek, 0.5 * jaw)});
      s.region_motion[3].push_back({t + 0.25, t + 0.5, Affine::translation(cheek, -0.5 * jaw)});
    }
    for (double t = 2.0; t < s.duration; t += 1.5) {
      const double vx = 0.8 * (2.0 * u01(rng) - 1.0);
      s.head_motion.push_back({t, t + 0.75, Affine::translation(vx, 0.0)});
      s.head_motion.push_back({t + 0.75, t + 1.5, Affine::translation(-vx, 0.0)});
    }
    for (double t = 3.0; t < s.duration; t += 7.0) {
      s.bursts.push_back({1, t, t + 3.0, 7.0, 1.6});
      s.bursts.push_back({3, t + 2.0, t + 5.0, 7.0, 2.1});
      s.bursts.push_back({0, t + 4.0, t + 6.5, 6.0, 1.3});
    }
    s.occluders.push_back({8.0, 16.0, -60.0, 30.0, 60.0, 60.0, 1.2, 0.0, 35.0});
    s.occluders.push_back({24.0, 32.0, 320.0, 110.0, 60.0, 80.0, -1.2, 0.0, 35.0});
    return s;
  }
  throw InputError("unknown scene preset '" + name + "'");
}

std::vector<SceneSpec> preset_scenes() {
  std::vector<SceneSpec> out;
  for (const auto& n : preset_names()) out.push_back(preset(n));
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::vector<double>> parse_tuples(const std::string& text, std::size_t arity, const std::string& key) {
  std::vector<std::vector<double>> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ';')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> vals;
    std::istringstream fields(item);
    std::string f;
    while (std::getline(fields, f, ':')) vals.push_back(std::stod(f));
    if (vals.size() != arity)
      throw InputError(fmt::format("scene key '{}': expected {} ':'-separated values per item", key, arity));
    out.push_back(std::move(vals));
  }
  return out;
}

}  // namespace

SceneSpec parse_scene(const std::string& text) {
  std::vector<std::string> region_lines;
  KeyValues kv = parse_key_values(text, &region_lines);
  std::set<std::string> seen;
  auto has = [&](const std::string& key) {
    seen.insert(key);
    return kv.count(key) > 0;
  };
  SceneSpec s = has("base") ? preset(kv.at("base")) : base_scene("custom", 1);
  if (!has("base")) s.name = "custom";

  auto num = [&](const char* key, double& dst) {
    if (has(key)) dst = kv_double(kv, key);
  };
  auto integer = [&](const char* key, auto& dst) {
    if (has(key)) dst = static_cast<std::remove_reference_t<decltype(dst)>>(kv_int(kv, key));
  };
  auto flag = [&](const char* key, bool& dst) {
    if (!has(key)) return;
    const std::string& v = kv.at(key);
    if (v == "true" || v == "1") dst = true;
    else if (v == "false" || v == "0") dst = false;
    else throw InputError(fmt::format("scene key '{}': expected true or false", key));
  };
  try {
    if (has("name")) s.name = kv.at("name");
    integer("width", s.width);
    integer("height", s.height);
    num("fps", s.fps);
    num("duration", s.duration);
    integer("seed", s.seed);
    flag("quantize", s.quantize);
    num("sensor_noise_std", s.sensor_noise_std);
    num("epoch_seconds", s.recommended_epoch_seconds);
    num("face.cx", s.face.cx);
    num("face.cy", s.face.cy);
    num("face.rx", s.face.rx);
    num("face.ry", s.face.ry);
    num("face.skin_b", s.face.skin_b);
    num("face.background_b", s.face.background_b);
    flag("face.features", s.face.features);
    if (has("illum.kind")) {
      const std::string& k = kv.at("illum.kind");
      if (k == "constant") s.illumination.kind = IlluminationKind::constant;
      else if (k == "gradient") s.illumination.kind = IlluminationKind::gradient;
      else if (k == "spotlight") s.illumination.kind = IlluminationKind::spotlight;
      else throw InputError("scene: unknown illum.kind '" + k + "'");
    }
    num("illum.level", s.illumination.level);
    num("illum.gradient_per_px", s.illumination.gradient_per_px);
    num("illum.spot_x", s.illumination.spot_x);
    num("illum.spot_y", s.illumination.spot_y);
    num("illum.spot_sigma", s.illumination.spot_sigma);
    num("illum.spot_floor", s.illumination.spot_floor);
    num("illum.scale_start", s.illumination.scale_start);
    num("illum.scale_end", s.illumination.scale_end);
    num("illum.shadow_x", s.illumination.shadow_x);
    num("illum.shadow_factor", s.illumination.shadow_factor);
    num("illum.shadow_softness", s.illumination.shadow_softness);
    num("perfusion.alpha_max", s.perfusion.alpha_max);
    integer("perfusion.cell", s.perfusion.cell);
    num("perfusion.zero_fraction", s.perfusion.zero_fraction);
    num("perfusion.zero_level", s.perfusion.zero_level);
    num("perfusion.min_level", s.perfusion.min_level);
    if (has("perfusion.region_gain")) {
      s.perfusion.region_gain.clear();
      std::istringstream in(kv.at("perfusion.region_gain"));
      std::string g;
      while (std::getline(in, g, ',')) s.perfusion.region_gain.push_back(std::stod(g));
    }
    num("texture.density", s.texture.density);
    num("texture.amplitude", s.texture.amplitude);
    num("texture.sigma", s.texture.sigma);
    num("surface.std", s.surface.std);
    num("surface.max_freq_hz", s.surface.max_freq_hz);
    integer("surface.components", s.surface.components);
    num("surface.node_spacing", s.surface.node_spacing);
    num("ppg.pr_bpm", s.ppg.pr_bpm);
    num("ppg.pr_end_bpm", s.ppg.pr_end_bpm);
    num("ppg.h2", s.ppg.h2);
    num("ppg.h3", s.ppg.h3);
    num("ppg.jitter_ms", s.ppg.jitter_ms);
    if (has("head_motion")) {
      s.head_motion.clear();
      for (const auto& v : parse_tuples(kv.at("head_motion"), 4, "head_motion"))
        s.head_motion.push_back({v[0], v[1], Affine::translation(v[2], v[3])});
    }
    if (has("bursts")) {
      s.bursts.clear();
      for (const auto& v : parse_tuples(kv.at("bursts"), 5, "bursts"))
        s.bursts.push_back({static_cast<int>(v[0]), v[1], v[2], v[3], v[4]});
    }
    if (has("occluders")) {
      s.occluders.clear();
      for (const auto& v : parse_tuples(kv.at("occluders"), 9, "occluders"))
        s.occluders.push_back({v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8]});
    }
  } catch (const std::invalid_argument&) {
    throw InputError("scene: malformed number");
  } catch (const std::out_of_range&) {
    throw InputError("scene: number out of range");
  }
  for (const auto& [key, value] : kv)
    if (!seen.count(key)) throw InputError("scene: unknown key '" + key + "'");
  if (!region_lines.empty()) {
    std::string joined;
    for (const auto& l : region_lines) joined += l + "\n";
    s.regions = parse_region_file(joined).sets.front().regions;
    s.region_motion.clear();
    s.bursts.erase(std::remove_if(s.bursts.begin(), s.bursts.end(),
                                  [&](const Burst& b) { return static_cast<std::size_t>(b.region) >= s.regions.size(); }),
                   s.bursts.end());
  }
  s.validate();
  return s;
}

void write_artifacts(const Rendered& r, const SceneSpec& spec, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  store_sequence(r.frames, dir / "frames");
  store_region_file(r.truth.regions, dir / "regions.txt");

  GroundTruth gt;
  gt.sample_rate = r.truth.ppg_500.fs;
  gt.samples = r.truth.ppg_500.samples;
  store_ground_truth(gt, dir / "truth.csv");
  store_beat_times(r.truth.ppg_500.beat_times, dir / "beats.csv");

  std::string rois = "roi_id,region_index,amplitude\n";
  for (const auto& t : r.truth.rois) rois += fmt::format("{},{},{:.9g}\n", t.roi_id, t.roi_id / 1000, t.amplitude);
  write_text_file(dir / "roi_truth.csv", rois);

  std::string aff = "frame,region_index,a,b,tx,c,d,ty\n";
  for (std::size_t t = 0; t < r.truth.cumulative.size(); ++t)
    for (std::size_t k = 0; k < r.truth.cumulative[t].size(); ++k) {
      const Affine& m = r.truth.cumulative[t][k];
      aff += fmt::format("{},{},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g}\n", t, k, m.a, m.b, m.tx, m.c, m.d, m.ty);
    }
  write_text_file(dir / "affines.csv", aff);

  write_text_file(dir / "scene.txt", fmt::format("name={}\nseed={}\nwidth={}\nheight={}\nfps={}\nduration={}\n"
                                                 "epoch_seconds={}\n",
                                                 spec.name, spec.seed, spec.width, spec.height, spec.fps,
                                                 spec.duration, spec.recommended_epoch_seconds));
}

}  // namespace dppg::sim
