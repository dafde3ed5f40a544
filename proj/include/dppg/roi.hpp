#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dppg/frameio.hpp"
#include "dppg/geometry.hpp"
#include "dppg/image.hpp"

namespace dppg::roi {

struct Roi {
  int id = 0;  // region_index * 1000 + block index, stable across epochs
  int region_index = 0;
  std::string region_label;
  Quad quad;
  int block_size = 20;
};

struct RoiGrid {
  std::vector<Roi> rois;
  std::vector<std::string> warnings;  // regions too small to hold a block
};

/// Tiles each polygon with axis-aligned block x block squares anchored at the
/// polygon's bounding-box corner; a block is kept only when all four
/// corners lie inside (or on) the polygon.
RoiGrid grid_regions(std::span<const LabeledPolygon> regions, int block);
RoiGrid grid_regions(const RegionSet& set, int block);

struct RoiTrace {
  int roi_id = 0;
  std::vector<double> values;
  std::vector<bool> valid;
};

/// Mean of pixels whose centres (x + 0.5, y + 0.5) fall inside the quad.
/// nullopt when no pixel centre is covered (quad outside the frame).
template <typename T>
std::optional<double> average_roi(const Image<T>& frame, const Quad& quad);

/// Averages every quad over one frame. Parallel over ROIs with OpenMP;
/// `average_rois_serial` is the reference the parallel version must equal.
std::vector<std::optional<double>> average_rois(const GrayImage& frame, std::span<const Quad> quads);
std::vector<std::optional<double>> average_rois_serial(const GrayImage& frame, std::span<const Quad> quads);

extern template std::optional<double> average_roi(const Image<std::uint8_t>&, const Quad&);
extern template std::optional<double> average_roi(const Image<float>&, const Quad&);
extern template std::optional<double> average_roi(const Image<double>&, const Quad&);

}  // namespace dppg::roi
