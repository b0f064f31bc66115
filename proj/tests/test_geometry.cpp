#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "lmfield/geometry.hpp"
#include "oracles.hpp"

using namespace lmf;
using namespace lmf::geom;

TEST(Geometry, AreaAndOrientation) {
  const Polygon sq = box_polygon(0, 0, 2, 3);
  EXPECT_DOUBLE_EQ(signed_area(sq), 6.0);
  EXPECT_DOUBLE_EQ(perimeter(sq), 10.0);
  EXPECT_TRUE(contains(sq, {1, 1}));
  EXPECT_FALSE(contains(sq, {3, 1}));
}

TEST(Geometry, HalfPlaneClipping) {
  const Polygon sq = box_polygon(0, 0, 1, 1);
  EXPECT_NEAR(area(clip_halfplane(sq, {1, 0}, 0.25)), 0.25, 1e-15);
  EXPECT_NEAR(area(clip_bisector(sq, {0, 0.5}, {1, 0.5})), 0.5, 1e-15);
  EXPECT_TRUE(clip_halfplane(sq, {1, 0}, -1.0).empty());
  EXPECT_NEAR(area(clip_to_box(box_polygon(-1, -1, 2, 2), 0, 0, 1, 1)), 1.0, 1e-15);
}

TEST(CirclePolygonArea, TrivialCases) {
  const Polygon big = box_polygon(-10, -10, 10, 10);
  EXPECT_NEAR(circle_polygon_area(big, {1, 2}, 1.5), std::numbers::pi * 2.25, 1e-12);
  const Polygon small = box_polygon(0, 0, 1, 1);
  EXPECT_NEAR(circle_polygon_area(small, {0.5, 0.5}, 5.0), 1.0, 1e-12);
  EXPECT_NEAR(circle_polygon_area(small, {0, 0}, 1.0), std::numbers::pi / 4, 1e-12);
}

TEST(CirclePolygonArea, ZeroRadiusAndDisjoint) {
  const Polygon sq = box_polygon(0, 0, 1, 1);
  EXPECT_EQ(circle_polygon_area(sq, {0.5, 0.5}, 0.0), 0.0);
  EXPECT_NEAR(circle_polygon_area(sq, {5, 5}, 1.0), 0.0, 1e-15);
}

TEST(CirclePolygonArea, HalfDiskOnAnEdge) {
  const Polygon sq = box_polygon(0, 0, 4, 4);
  EXPECT_NEAR(circle_polygon_area(sq, {2, 0}, 1.0), std::numbers::pi / 2, 1e-12);
}

TEST(CirclePolygonArea, Errors) {
  EXPECT_THROW(circle_polygon_area(Polygon{{0, 0}, {1, 0}, {2, 0}}, {0, 0}, 1.0), Error);
  EXPECT_THROW(circle_polygon_area(box_polygon(0, 0, 1, 1), {0, 0}, -1.0), Error);
  try {
    circle_polygon_area(Polygon{{0, 0}, {1, 1}}, {0, 0}, 1.0);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::geometry);
  }
}

TEST(CirclePolygonArea, MonotoneInRadiusAndClamped) {
  std::mt19937_64 eng(17);
  for (int t = 0; t < 20; ++t) {
    const Polygon p = oracle::random_convex_polygon(eng);
    if (area(p) < 1e-3) continue;
    const Point c{0.3, -0.2};
    double prev = 0.0;
    for (double r = 0.0; r <= 8.0; r += 0.05) {
      const double a = circle_polygon_area(p, c, r);
      EXPECT_GE(a, prev - 1e-12);
      EXPECT_LE(a, area(p) + 1e-12);
      EXPECT_LE(a, std::numbers::pi * r * r + 1e-12);
      prev = a;
    }
  }
}

TEST(CirclePolygonArea, AgreesWithMonteCarlo) {
  std::mt19937_64 eng(2718);
  std::uniform_real_distribution<double> u(-1.0, 1.0), ur(0.2, 2.5);
  int done = 0;
  while (done < 10) {
    const Polygon p = oracle::random_convex_polygon(eng);
    if (area(p) < 0.5) continue;
    const Point c{u(eng), u(eng)};
    const double r = ur(eng);
    const double exact = circle_polygon_area(p, c, r);
    const double mc = oracle::circle_polygon_area_mc(p, c, r, 400000, 1000 + done);
    // binomial SE of the rejection estimate
    double bx = p[0].x, by = p[0].y, ex = bx, ey = by;
    for (auto v : p) {
      bx = std::min(bx, v.x), by = std::min(by, v.y);
      ex = std::max(ex, v.x), ey = std::max(ey, v.y);
    }
    const double box = (ex - bx) * (ey - by);
    const double q = exact / box;
    EXPECT_NEAR(mc, exact, 4.0 * box * std::sqrt(q * (1 - q) / 400000) + 1e-9);
    ++done;
  }
}
