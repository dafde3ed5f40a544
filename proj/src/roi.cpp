#include "dppg/roi.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace dppg::roi {

namespace {

bool inside_or_on(Point2 p, std::span<const Point2> poly) {
  if (point_in_polygon(p, poly)) return true;
  // Boundary points: treat as inside when within 1e-9 of an edge.
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point2 a = poly[j], b = poly[i];
    const double len = distance(a, b);
    if (len == 0.0) continue;
    const double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    const double dot = (p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y);
    if (std::abs(cross) / len < 1e-9 && dot >= -1e-9 && dot <= len * len + 1e-9) return true;
  }
  return false;
}

}  // namespace

RoiGrid grid_regions(std::span<const LabeledPolygon> regions, int block) {
  if (block < 4) throw InputError("ROI block size must be >= 4 px");
  RoiGrid grid;
  for (std::size_t r = 0; r < regions.size(); ++r) {
    const auto& poly = regions[r].polygon;
    const BoundingBox bb = bounds(poly);
    // Anchored at the exact bounding-box corner so a translated polygon
    // yields the same tiling, translated.
    const double x0 = bb.min_x, y0 = bb.min_y;
    int count = 0;
    for (int j = 0; y0 + (j + 1) * block <= bb.max_y + 1e-9; ++j) {
      const double y = y0 + j * block;
      for (int i = 0; x0 + (i + 1) * block <= bb.max_x + 1e-9; ++i) {
        const double x = x0 + i * block;
        const Quad q{{Point2{x, y}, Point2{x + block, y}, Point2{x + block, y + block}, Point2{x, y + block}}};
        const bool inside = std::all_of(q.corners.begin(), q.corners.end(),
                                        [&](Point2 c) { return inside_or_on(c, poly); });
        if (!inside) continue;
        grid.rois.push_back(Roi{static_cast<int>(r) * 1000 + count, static_cast<int>(r), regions[r].label, q, block});
        ++count;
      }
    }
    if (count == 0)
      grid.warnings.push_back(fmt::format("region '{}' is too small for a {}x{} block", regions[r].label, block, block));
  }
  return grid;
}

RoiGrid grid_regions(const RegionSet& set, int block) { return grid_regions(set.regions, block); }

template <typename T>
std::optional<double> average_roi(const Image<T>& frame, const Quad& quad) {
  const BoundingBox bb = bounds(quad.corners);
  const int x_lo = std::max(0, static_cast<int>(std::floor(bb.min_x - 0.5)));
  const int y_lo = std::max(0, static_cast<int>(std::floor(bb.min_y - 0.5)));
  const int x_hi = std::min(frame.width - 1, static_cast<int>(std::ceil(bb.max_x - 0.5)));
  const int y_hi = std::min(frame.height - 1, static_cast<int>(std::ceil(bb.max_y - 0.5)));
  if (x_lo > x_hi || y_lo > y_hi) return std::nullopt;

  const std::span<const Point2> poly(quad.corners.data(), 4);
  double sum = 0.0;
  std::size_t n = 0;
  for (int y = y_lo; y <= y_hi; ++y) {
    const double cy = y + 0.5;
    // The quad is convex, so each row is a single span: find its x range by
    // intersecting the row with every edge.
    double left = std::numeric_limits<double>::infinity();
    double right = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0, j = 3; i < 4; j = i++) {
      const Point2 a = poly[i], b = poly[j];
      if ((a.y > cy) != (b.y > cy)) {
        const double xc = a.x + (cy - a.y) * (b.x - a.x) / (b.y - a.y);
        left = std::min(left, xc);
        right = std::max(right, xc);
      }
    }
    if (!(left <= right)) continue;
    // Pixel centre x + 0.5 is inside iff left <= x + 0.5 < right, matching the
    // crossing-number convention in point_in_polygon.
    const int xs = std::max(x_lo, static_cast<int>(std::ceil(left - 0.5)));
    const int xe = std::min(x_hi, static_cast<int>(std::ceil(right - 0.5)) - 1);
    const T* row = frame.row(y);
    for (int x = xs; x <= xe; ++x) {
      sum += static_cast<double>(row[x]);
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

template std::optional<double> average_roi(const Image<std::uint8_t>&, const Quad&);
template std::optional<double> average_roi(const Image<float>&, const Quad&);
template std::optional<double> average_roi(const Image<double>&, const Quad&);

std::vector<std::optional<double>> average_rois(const GrayImage& frame, std::span<const Quad> quads) {
  std::vector<std::optional<double>> out(quads.size());
  const auto n = static_cast<std::ptrdiff_t>(quads.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = average_roi(frame, quads[static_cast<std::size_t>(i)]);
  return out;
}

std::vector<std::optional<double>> average_rois_serial(const GrayImage& frame, std::span<const Quad> quads) {
  std::vector<std::optional<double>> out;
  out.reserve(quads.size());
  for (const auto& q : quads) out.push_back(average_roi(frame, q));
  return out;
}

}  // namespace dppg::roi
