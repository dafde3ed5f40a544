#include <doctest.h>

#include <random>

#include "dppg/roi.hpp"

using namespace dppg;

namespace {

Quad square(double x, double y, double s) { return {{{{x, y}, {x + s, y}, {x + s, y + s}, {x, y + s}}}}; }

}  // namespace

TEST_CASE("square region tiles into 5x5 blocks") {
  const std::vector<LabeledPolygon> regs{{"sq", {{10, 10}, {110, 10}, {110, 110}, {10, 110}}}};
  const roi::RoiGrid g = roi::grid_regions(regs, 20);
  CHECK(g.rois.size() == 25);
  CHECK(g.warnings.empty());
  CHECK(g.rois.front().quad.corners[0].x == 10.0);
}

TEST_CASE("region smaller than a block gives a warning") {
  const std::vector<LabeledPolygon> regs{{"tiny", {{0, 0}, {19, 0}, {19, 19}, {0, 19}}}};
  const roi::RoiGrid g = roi::grid_regions(regs, 20);
  CHECK(g.rois.empty());
  CHECK(g.warnings.size() == 1);
}

TEST_CASE("triangle: count equals exhaustive enumeration of fully inside blocks") {
  for (const Point2 o : {Point2{0, 0}, Point2{13.5, 7.25}, Point2{3, 41}}) {
    const std::vector<LabeledPolygon> regs{{"tri", {o, {o.x + 60, o.y}, {o.x, o.y + 60}}}};
    // Inside-or-on for this triangle is a pair of axis bounds and one half-plane.
    auto inside = [&](double x, double y) { return x >= o.x && y >= o.y && (x - o.x) + (y - o.y) <= 60.0 + 1e-9; };
    int expected = 0;
    for (int by = 0; by < 3; ++by)
      for (int bx = 0; bx < 3; ++bx) {
        const double x = o.x + 20 * bx, y = o.y + 20 * by;
        expected += inside(x, y) && inside(x + 20, y) && inside(x + 20, y + 20) && inside(x, y + 20);
      }
    CHECK(roi::grid_regions(regs, 20).rois.size() == static_cast<std::size_t>(expected));
  }
}

TEST_CASE("roi ids are stable per region") {
  const std::vector<LabeledPolygon> regs{{"a", {{0, 0}, {40, 0}, {40, 20}, {0, 20}}},
                                         {"b", {{50, 0}, {90, 0}, {90, 20}, {50, 20}}}};
  const roi::RoiGrid g = roi::grid_regions(regs, 20);
  REQUIRE(g.rois.size() == 4);
  CHECK(g.rois[0].id == 0);
  CHECK(g.rois[1].id == 1);
  CHECK(g.rois[2].id == 1000);
  CHECK(g.rois[3].region_index == 1);
}

TEST_CASE("average over constant, tiny and checkerboard patches") {
  CHECK(*roi::average_roi(GrayImage(64, 64, 128), square(3.7, 9.2, 20)) == 128.0);

  GrayImage four(2, 2);
  four.pixels = {10, 20, 30, 40};
  CHECK(*roi::average_roi(four, square(0, 0, 2)) == 25.0);

  GrayImage cb(40, 40);
  for (int y = 0; y < 40; ++y)
    for (int x = 0; x < 40; ++x) cb.at(x, y) = (x + y) % 2 ? 255 : 0;
  CHECK(*roi::average_roi(cb, square(5, 5, 20)) == 127.5);

  CHECK_FALSE(roi::average_roi(cb, square(100, 100, 20)));
}

TEST_CASE("property: parallel averaging equals the serial reference") {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> px(0, 255);
  std::uniform_real_distribution<double> pos(-10.0, 150.0), ang(-0.3, 0.3);
  GrayImage img(160, 120);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(px(rng));
  std::vector<Quad> quads;
  for (int i = 0; i < 300; ++i) {
    const double cx = pos(rng), cy = pos(rng), a = ang(rng);
    const Affine m{std::cos(a), -std::sin(a), cx, std::sin(a), std::cos(a), cy};
    quads.push_back(warp(square(-10, -10, 20), m));
  }
  const auto par = roi::average_rois(img, quads);
  const auto ser = roi::average_rois_serial(img, quads);
  REQUIRE(par.size() == ser.size());
  for (std::size_t i = 0; i < par.size(); ++i) {
    CHECK(par[i].has_value() == ser[i].has_value());
    if (par[i] && ser[i]) CHECK(*par[i] == *ser[i]);
  }
}
