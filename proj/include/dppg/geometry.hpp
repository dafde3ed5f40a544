#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

namespace dppg {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
double distance(Point2 a, Point2 b);

using Polygon = std::vector<Point2>;

/// Four corners in order (top-left, top-right, bottom-right, bottom-left at
/// definition time). After affine warping the quad is a parallelogram.
struct Quad {
  std::array<Point2, 4> corners;
};

/// 2x3 affine map: [x', y'] = [[a, b], [c, d]] * [x, y] + [tx, ty].
struct Affine {
  double a = 1.0, b = 0.0, tx = 0.0;
  double c = 0.0, d = 1.0, ty = 0.0;

  static Affine identity() { return {}; }
  static Affine translation(double dx, double dy) { return {1.0, 0.0, dx, 0.0, 1.0, dy}; }

  Point2 apply(Point2 p) const { return {a * p.x + b * p.y + tx, c * p.x + d * p.y + ty}; }
  double det() const { return a * d - b * c; }
  std::optional<Affine> inverse() const;
  bool finite() const;
};

/// (lhs ∘ rhs)(p) = lhs(rhs(p)).
Affine compose(const Affine& lhs, const Affine& rhs);

Quad warp(const Quad& q, const Affine& m);
Polygon warp(const Polygon& poly, const Affine& m);

/// Even-odd crossing test. Points exactly on an edge are resolved by the
/// half-open convention, so a grid of pixel centres is never double counted
/// by two polygons sharing an edge.
bool point_in_polygon(Point2 p, std::span<const Point2> poly);
bool point_in_quad(Point2 p, const Quad& q);

double signed_area(std::span<const Point2> poly);
Point2 centroid(std::span<const Point2> poly);

/// True when no two non-adjacent edges intersect.
bool is_simple(std::span<const Point2> poly);

struct BoundingBox {
  double min_x, min_y, max_x, max_y;
};
BoundingBox bounds(std::span<const Point2> pts);

/// Andrew's monotone chain; counter-clockwise, no repeated end point.
Polygon convex_hull(std::vector<Point2> pts);

}  // namespace dppg
