#include <doctest.h>

#include <random>

#include "dppg/geometry.hpp"

using namespace dppg;

TEST_CASE("affine compose and inverse") {
  const Affine m{1.02, 0.01, 3.0, -0.01, 0.99, -2.0};
  const Affine t = Affine::translation(5, -1);
  const Point2 p{7.5, -3.25};
  const Point2 a = compose(m, t).apply(p), b = m.apply(t.apply(p));
  CHECK(a.x == doctest::Approx(b.x).epsilon(1e-12));
  CHECK(a.y == doctest::Approx(b.y).epsilon(1e-12));

  const auto inv = m.inverse();
  REQUIRE(inv);
  const Point2 back = inv->apply(m.apply(p));
  CHECK(distance(back, p) < 1e-12);
  CHECK_FALSE(Affine{1, 2, 0, 2, 4, 0}.inverse());
}

TEST_CASE("point in polygon: pixel centres of two adjacent squares are counted once") {
  const Polygon left{{0, 0}, {10, 0}, {10, 10}, {0, 10}};
  const Polygon right{{10, 0}, {20, 0}, {20, 10}, {10, 10}};
  int both = 0, total = 0;
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 20; ++x) {
      const Point2 c{x + 0.5, y + 0.5};
      const bool l = point_in_polygon(c, left), r = point_in_polygon(c, right);
      both += l && r;
      total += l || r;
    }
  CHECK(both == 0);
  CHECK(total == 200);
}

TEST_CASE("shoelace area, centroid and simplicity") {
  const Polygon sq{{0, 0}, {4, 0}, {4, 2}, {0, 2}};
  CHECK(signed_area(sq) == doctest::Approx(8.0));
  const Point2 c = centroid(sq);
  CHECK(c.x == doctest::Approx(2.0));
  CHECK(c.y == doctest::Approx(1.0));
  CHECK(is_simple(sq));
  const Polygon bowtie{{0, 0}, {4, 2}, {4, 0}, {0, 2}};
  CHECK_FALSE(is_simple(bowtie));
}

TEST_CASE("property: warping scales area by the determinant") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Polygon tri{{0, 0}, {30, 5}, {12, 40}};
  for (int k = 0; k < 50; ++k) {
    const Affine m{1 + 0.3 * u(rng), 0.3 * u(rng), 10 * u(rng), 0.3 * u(rng), 1 + 0.3 * u(rng), 10 * u(rng)};
    CHECK(signed_area(warp(tri, m)) == doctest::Approx(m.det() * signed_area(tri)).epsilon(1e-10));
  }
}

TEST_CASE("convex hull drops interior points") {
  std::vector<Point2> pts{{0, 0}, {10, 0}, {10, 10}, {0, 10}, {5, 5}, {2, 7}, {5, 0}};
  const Polygon h = convex_hull(pts);
  CHECK(h.size() == 4);
  CHECK(signed_area(h) == doctest::Approx(100.0));
}
