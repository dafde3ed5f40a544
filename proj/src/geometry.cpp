#include "dppg/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dppg {

double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

std::optional<Affine> Affine::inverse() const {
  const double dt = det();
  if (std::abs(dt) < 1e-12) return std::nullopt;
  Affine r;
  r.a = d / dt;
  r.b = -b / dt;
  r.c = -c / dt;
  r.d = a / dt;
  r.tx = -(r.a * tx + r.b * ty);
  r.ty = -(r.c * tx + r.d * ty);
  return r;
}

bool Affine::finite() const {
  return std::isfinite(a) && std::isfinite(b) && std::isfinite(c) && std::isfinite(d) &&
         std::isfinite(tx) && std::isfinite(ty);
}

Affine compose(const Affine& l, const Affine& r) {
  Affine o;
  o.a = l.a * r.a + l.b * r.c;
  o.b = l.a * r.b + l.b * r.d;
  o.c = l.c * r.a + l.d * r.c;
  o.d = l.c * r.b + l.d * r.d;
  o.tx = l.a * r.tx + l.b * r.ty + l.tx;
  o.ty = l.c * r.tx + l.d * r.ty + l.ty;
  return o;
}

Quad warp(const Quad& q, const Affine& m) {
  Quad out;
  for (std::size_t i = 0; i < 4; ++i) out.corners[i] = m.apply(q.corners[i]);
  return out;
}

Polygon warp(const Polygon& poly, const Affine& m) {
  Polygon out;
  out.reserve(poly.size());
  for (const auto& p : poly) out.push_back(m.apply(p));
  return out;
}

bool point_in_polygon(Point2 p, std::span<const Point2> poly) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point2 a = poly[i];
    const Point2 b = poly[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

bool point_in_quad(Point2 p, const Quad& q) {
  return point_in_polygon(p, std::span<const Point2>(q.corners.data(), 4));
}

double signed_area(std::span<const Point2> poly) {
  double s = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) s += poly[j].x * poly[i].y - poly[i].x * poly[j].y;
  return 0.5 * s;
}

Point2 centroid(std::span<const Point2> poly) {
  const double area = signed_area(poly);
  if (std::abs(area) < 1e-12) {
    Point2 m;
    for (const auto& p : poly) m = m + p;
    return (1.0 / static_cast<double>(poly.size())) * m;
  }
  double cx = 0.0, cy = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const double cross = poly[j].x * poly[i].y - poly[i].x * poly[j].y;
    cx += (poly[j].x + poly[i].x) * cross;
    cy += (poly[j].y + poly[i].y) * cross;
  }
  return {cx / (6.0 * area), cy / (6.0 * area)};
}

namespace {

double orient(Point2 a, Point2 b, Point2 c) { return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x); }

bool on_segment(Point2 a, Point2 b, Point2 p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

bool segments_intersect(Point2 p1, Point2 p2, Point2 q1, Point2 q2) {
  const double d1 = orient(q1, q2, p1);
  const double d2 = orient(q1, q2, p2);
  const double d3 = orient(p1, p2, q1);
  const double d4 = orient(p1, p2, q2);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
  if (d1 == 0 && on_segment(q1, q2, p1)) return true;
  if (d2 == 0 && on_segment(q1, q2, p2)) return true;
  if (d3 == 0 && on_segment(p1, p2, q1)) return true;
  if (d4 == 0 && on_segment(p1, p2, q2)) return true;
  return false;
}

}  // namespace

bool is_simple(std::span<const Point2> poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  if (std::abs(signed_area(poly)) < 1e-12) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 a1 = poly[i], a2 = poly[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      // Adjacent edges share a vertex and are skipped.
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      if (segments_intersect(a1, a2, poly[j], poly[(j + 1) % n])) return false;
    }
  }
  return true;
}

BoundingBox bounds(std::span<const Point2> pts) {
  BoundingBox bb{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                 -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& p : pts) {
    bb.min_x = std::min(bb.min_x, p.x);
    bb.min_y = std::min(bb.min_y, p.y);
    bb.max_x = std::max(bb.max_x, p.x);
    bb.max_y = std::max(bb.max_y, p.y);
  }
  return bb;
}

Polygon convex_hull(std::vector<Point2> pts) {
  std::sort(pts.begin(), pts.end(), [](Point2 a, Point2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  pts.erase(std::unique(pts.begin(), pts.end(), [](Point2 a, Point2 b) { return a.x == b.x && a.y == b.y; }),
            pts.end());
  if (pts.size() < 3) return pts;
  Polygon hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && orient(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && orient(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

}  // namespace dppg
