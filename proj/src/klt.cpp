#include <algorithm>
#include <cmath>

#include "dppg/tracking.hpp"

namespace dppg::tracking {

std::size_t FeatureSet::live_count() const {
  return static_cast<std::size_t>(std::count(alive.begin(), alive.end(), true));
}

namespace {

FloatImage to_float(const GrayImage& g) {
  FloatImage f(g.width, g.height);
  for (std::size_t i = 0; i < g.pixels.size(); ++i) f.pixels[i] = g.pixels[i];
  return f;
}

// 5-tap binomial blur, replicated border, then keep even samples.
FloatImage downsample(const FloatImage& src) {
  const int w = src.width, h = src.height;
  FloatImage tmp(w, h);
  constexpr float k[5] = {1.f / 16, 4.f / 16, 6.f / 16, 4.f / 16, 1.f / 16};
  for (int y = 0; y < h; ++y) {
    const float* r = src.row(y);
    float* o = tmp.row(y);
    for (int x = 0; x < w; ++x) {
      float s = 0.f;
      for (int i = -2; i <= 2; ++i) s += k[i + 2] * r[std::clamp(x + i, 0, w - 1)];
      o[x] = s;
    }
  }
  const int dw = (w + 1) / 2, dh = (h + 1) / 2;
  FloatImage out(dw, dh);
  for (int y = 0; y < dh; ++y) {
    for (int x = 0; x < dw; ++x) {
      float s = 0.f;
      for (int i = -2; i <= 2; ++i) s += k[i + 2] * tmp.at(2 * x, std::clamp(2 * y + i, 0, h - 1));
      out.at(x, y) = s;
    }
  }
  return out;
}

void central_gradients(const FloatImage& img, FloatImage& gx, FloatImage& gy) {
  const int w = img.width, h = img.height;
  gx = FloatImage(w, h);
  gy = FloatImage(w, h);
  for (int y = 0; y < h; ++y) {
    const float* r = img.row(y);
    const float* up = img.row(std::max(y - 1, 0));
    const float* dn = img.row(std::min(y + 1, h - 1));
    float* ox = gx.row(y);
    float* oy = gy.row(y);
    for (int x = 0; x < w; ++x) {
      ox[x] = 0.5f * (r[std::min(x + 1, w - 1)] - r[std::max(x - 1, 0)]);
      oy[x] = 0.5f * (dn[x] - up[x]);
    }
  }
}

// Bilinear sample in index coordinates with replicated border.
inline float sample(const FloatImage& img, double x, double y) {
  x = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
  y = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
  const int x0 = std::min(static_cast<int>(x), img.width - 2 < 0 ? 0 : img.width - 2);
  const int y0 = std::min(static_cast<int>(y), img.height - 2 < 0 ? 0 : img.height - 2);
  const int x1 = std::min(x0 + 1, img.width - 1), y1 = std::min(y0 + 1, img.height - 1);
  const double fx = x - x0, fy = y - y0;
  const float* r0 = img.row(y0);
  const float* r1 = img.row(y1);
  return static_cast<float>((1 - fy) * ((1 - fx) * r0[x0] + fx * r0[x1]) + fy * ((1 - fx) * r1[x0] + fx * r1[x1]));
}

struct TrackOutcome {
  Point2 position;
  bool ok = false;
};

TrackOutcome track_point(const Pyramid& prev, const Pyramid& next, Point2 p_cont, Point2 guess,
                         const TrackingConfig& cfg) {
  const int half = cfg.klt_window / 2;
  const int side = 2 * half + 1;
  const std::size_t npx = static_cast<std::size_t>(side) * side;
  std::vector<float> tI(npx), tX(npx), tY(npx), tJ(npx);

  const double px0 = p_cont.x - 0.5, py0 = p_cont.y - 0.5;  // level-0 index coordinates
  const int top = std::min(prev.levels(), next.levels()) - 1;
  double gx = std::ldexp(guess.x, -top), gy = std::ldexp(guess.y, -top);  // carried down the pyramid
  for (int level = top; level >= 0; --level) {
    const double scale = std::ldexp(1.0, -level);
    const double px = px0 * scale, py = py0 * scale;
    const FloatImage& I = prev.image[static_cast<std::size_t>(level)];
    const FloatImage& Ix = prev.grad_x[static_cast<std::size_t>(level)];
    const FloatImage& Iy = prev.grad_y[static_cast<std::size_t>(level)];
    const FloatImage& J = next.image[static_cast<std::size_t>(level)];

    double gxx = 0.0, gxy = 0.0, gyy = 0.0;
    std::size_t k = 0;
    for (int dy = -half; dy <= half; ++dy)
      for (int dx = -half; dx <= half; ++dx, ++k) {
        tI[k] = sample(I, px + dx, py + dy);
        tX[k] = sample(Ix, px + dx, py + dy);
        tY[k] = sample(Iy, px + dx, py + dy);
        gxx += static_cast<double>(tX[k]) * tX[k];
        gxy += static_cast<double>(tX[k]) * tY[k];
        gyy += static_cast<double>(tY[k]) * tY[k];
      }
    double im = 0.0;
    for (std::size_t q = 0; q < npx; ++q) im += tI[q];
    im /= static_cast<double>(npx);
    double iv = 0.0;
    for (std::size_t q = 0; q < npx; ++q) iv += (tI[q] - im) * (tI[q] - im);
    const double det = gxx * gyy - gxy * gxy;
    const double tr_half = 0.5 * (gxx + gyy);
    const double min_eig = tr_half - std::sqrt(std::max(0.0, tr_half * tr_half - det));
    if (min_eig / static_cast<double>(npx) < cfg.klt_min_eigenvalue || det <= 0.0) return {};

    double vx = 0.0, vy = 0.0;
    for (int it = 0; it < cfg.klt_max_iterations; ++it) {
      const double cx = px + gx + vx, cy = py + gy + vy;
      if (cx < -half || cy < -half || cx > J.width - 1 + half || cy > J.height - 1 + half) return {};
      k = 0;
      double jm = 0.0;
      for (int dy = -half; dy <= half; ++dy)
        for (int dx = -half; dx <= half; ++dx, ++k) {
          tJ[k] = sample(J, cx + dx, cy + dy);
          jm += tJ[k];
        }
      jm /= static_cast<double>(npx);
      double jv = 0.0;
      for (std::size_t q = 0; q < npx; ++q) jv += (tJ[q] - jm) * (tJ[q] - jm);
      // Gain and offset of the target window are matched to the template.
      const double gain = jv > 0.0 && iv > 0.0 ? std::sqrt(iv / jv) : 1.0;
      double bx = 0.0, by = 0.0;
      for (std::size_t q = 0; q < npx; ++q) {
        const double diff = (tI[q] - im) - gain * (tJ[q] - jm);
        bx += diff * tX[q];
        by += diff * tY[q];
      }
      const double sx = (gyy * bx - gxy * by) / det;
      const double sy = (gxx * by - gxy * bx) / det;
      vx += sx;
      vy += sy;
      if (!std::isfinite(vx) || !std::isfinite(vy)) return {};
      if (sx * sx + sy * sy < cfg.klt_epsilon * cfg.klt_epsilon) break;
    }
    if (level > 0) {
      gx = 2.0 * (gx + vx);
      gy = 2.0 * (gy + vy);
    } else {
      gx += vx;
      gy += vy;
    }
  }
  const Point2 out{px0 + gx + 0.5, py0 + gy + 0.5};
  const FloatImage& J0 = next.image.front();
  if (out.x < 0.0 || out.y < 0.0 || out.x >= J0.width || out.y >= J0.height) return {};
  return {out, true};
}

}  // namespace

Pyramid Pyramid::build(const GrayImage& frame, int levels) {
  Pyramid p;
  p.image.push_back(to_float(frame));
  for (int l = 1; l < levels; ++l) {
    const FloatImage& last = p.image.back();
    if (last.width < 8 || last.height < 8) break;
    p.image.push_back(downsample(last));
  }
  p.grad_x.resize(p.image.size());
  p.grad_y.resize(p.image.size());
  for (std::size_t l = 0; l < p.image.size(); ++l) central_gradients(p.image[l], p.grad_x[l], p.grad_y[l]);
  return p;
}

FloatImage min_eigenvalue_map(const GrayImage& frame, int window) {
  const int w = frame.width, h = frame.height;
  FloatImage out(w, h, 0.f);
  if (w < 3 || h < 3) return out;
  // Sobel gradients, zero on the one-pixel border.
  std::vector<float> xx(static_cast<std::size_t>(w) * h, 0.f), xy(xx.size(), 0.f), yy(xx.size(), 0.f);
  for (int y = 1; y < h - 1; ++y)
    for (int x = 1; x < w - 1; ++x) {
      auto v = [&](int dx, int dy) { return static_cast<float>(frame.at(x + dx, y + dy)); };
      const float gx = (v(1, -1) + 2 * v(1, 0) + v(1, 1)) - (v(-1, -1) + 2 * v(-1, 0) + v(-1, 1));
      const float gy = (v(-1, 1) + 2 * v(0, 1) + v(1, 1)) - (v(-1, -1) + 2 * v(0, -1) + v(1, -1));
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      xx[i] = gx * gx;
      xy[i] = gx * gy;
      yy[i] = gy * gy;
    }
  const int half = window / 2;
  // Gaussian weights give an isolated corner a single peak; a flat box
  // window leaves a plateau as wide as the window minus the Sobel support.
  const double sigma = 0.25 * window;
  std::vector<double> g(static_cast<std::size_t>(window) * window);
  for (int dy = -half; dy <= half; ++dy)
    for (int dx = -half; dx <= half; ++dx)
      g[static_cast<std::size_t>(dy + half) * window + (dx + half)] = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
  for (int y = half; y < h - half; ++y)
    for (int x = half; x < w - half; ++x) {
      double a = 0, b = 0, c = 0;
      for (int dy = -half; dy <= half; ++dy)
        for (int dx = -half; dx <= half; ++dx) {
          const std::size_t i = static_cast<std::size_t>(y + dy) * w + (x + dx);
          const double wt = g[static_cast<std::size_t>(dy + half) * window + (dx + half)];
          a += wt * xx[i];
          b += wt * xy[i];
          c += wt * yy[i];
        }
      const double tr = 0.5 * (a + c);
      out.at(x, y) = static_cast<float>(tr - std::sqrt(0.25 * (a - c) * (a - c) + b * b));
    }
  return out;
}

FeatureSet good_features(const GrayImage& frame, const Polygon& region, int m, const TrackingConfig& cfg) {
  FeatureSet fs;
  if (m <= 0) return fs;
  const FloatImage eig = min_eigenvalue_map(frame, cfg.feature_window);
  const BoundingBox bb = bounds(region);
  const int x_lo = std::max(1, static_cast<int>(std::floor(bb.min_x)));
  const int y_lo = std::max(1, static_cast<int>(std::floor(bb.min_y)));
  const int x_hi = std::min(frame.width - 2, static_cast<int>(std::ceil(bb.max_x)));
  const int y_hi = std::min(frame.height - 2, static_cast<int>(std::ceil(bb.max_y)));

  struct Candidate {
    float response;
    int x, y;
  };
  std::vector<Candidate> cands;
  float peak = 0.f;
  for (int y = y_lo; y <= y_hi; ++y)
    for (int x = x_lo; x <= x_hi; ++x) {
      if (!point_in_polygon({x + 0.5, y + 0.5}, region)) continue;
      peak = std::max(peak, eig.at(x, y));
    }
  if (!(peak > 0.f)) return fs;
  const float threshold = static_cast<float>(cfg.feature_quality) * peak;
  for (int y = y_lo; y <= y_hi; ++y)
    for (int x = x_lo; x <= x_hi; ++x) {
      const float v = eig.at(x, y);
      if (v < threshold || v <= 0.f) continue;
      if (!point_in_polygon({x + 0.5, y + 0.5}, region)) continue;
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          if ((dx || dy) && eig.at(x + dx, y + dy) > v) {
            is_max = false;
            break;
          }
      if (is_max) cands.push_back({v, x, y});
    }
  std::stable_sort(cands.begin(), cands.end(),
                   [](const Candidate& a, const Candidate& b) { return a.response > b.response; });
  const double min_d2 = cfg.feature_min_distance * cfg.feature_min_distance;
  for (const auto& c : cands) {
    const Point2 p{c.x + 0.5, c.y + 0.5};
    bool far = true;
    for (const auto& q : fs.points) {
      const double dx = p.x - q.x, dy = p.y - q.y;
      if (dx * dx + dy * dy < min_d2) {
        far = false;
        break;
      }
    }
    if (!far) continue;
    fs.points.push_back(p);
    if (static_cast<int>(fs.points.size()) == m) break;
  }
  fs.alive.assign(fs.points.size(), true);
  return fs;
}

namespace {

Point2 initial_displacement(const FeatureSet& pts, const FeatureSet* guess, std::size_t i) {
  if (!guess) return {0.0, 0.0};
  return {guess->points[i].x - pts.points[i].x, guess->points[i].y - pts.points[i].y};
}

}  // namespace

FeatureSet klt_track(const Pyramid& prev, const Pyramid& next, const FeatureSet& pts, const TrackingConfig& cfg,
                     const FeatureSet* guess) {
  FeatureSet out = pts;
  const auto n = static_cast<std::ptrdiff_t>(pts.points.size());
  std::vector<char> ok(pts.points.size(), 0);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    if (!pts.alive[u] || (guess && !guess->alive[u])) continue;
    const TrackOutcome r = track_point(prev, next, pts.points[u], initial_displacement(pts, guess, u), cfg);
    ok[u] = r.ok ? 1 : 0;
    if (r.ok) out.points[u] = r.position;
  }
  for (std::size_t i = 0; i < ok.size(); ++i) out.alive[i] = pts.alive[i] && ok[i];
  return out;
}

FeatureSet klt_track_serial(const Pyramid& prev, const Pyramid& next, const FeatureSet& pts,
                            const TrackingConfig& cfg, const FeatureSet* guess) {
  FeatureSet out = pts;
  for (std::size_t i = 0; i < pts.points.size(); ++i) {
    if (!pts.alive[i] || (guess && !guess->alive[i])) {
      out.alive[i] = false;
      continue;
    }
    const TrackOutcome r = track_point(prev, next, pts.points[i], initial_displacement(pts, guess, i), cfg);
    out.alive[i] = r.ok;
    if (r.ok) out.points[i] = r.position;
  }
  return out;
}

FeatureSet forward_backward_gate(const Pyramid& prev, const Pyramid& next, const FeatureSet& original,
                                 const FeatureSet& forward, const TrackingConfig& cfg) {
  const FeatureSet back = klt_track(next, prev, forward, cfg);
  FeatureSet out = forward;
  for (std::size_t i = 0; i < out.points.size(); ++i) {
    if (!forward.alive[i] || !original.alive[i]) {
      out.alive[i] = false;
      continue;
    }
    out.alive[i] = back.alive[i] && distance(back.points[i], original.points[i]) <= cfg.fb_error_px;
  }
  return out;
}

}  // namespace dppg::tracking
