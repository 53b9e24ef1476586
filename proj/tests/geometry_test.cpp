#include "crowdsim/geometry.hpp"

#include <random>

#include "gtest/gtest.h"

namespace crowdsim {
namespace {

constexpr double kTol = 1e-12;

TEST(RayCastTest, PerpendicularWall) {
  const ObstacleSet walls({{{10, -1}, {10, 1}}});
  const auto hit = ray_cast({0, 0}, {1, 0}, 25.0, walls, {});
  ASSERT_TRUE(hit.has_value());
  EXPECT_DOUBLE_EQ(*hit, 10.0);
}

TEST(RayCastTest, EmptyWorldIsNoHit) {
  EXPECT_FALSE(ray_cast({0, 0}, {1, 0}, 25.0, ObstacleSet{}, {}).has_value());
}

TEST(RayCastTest, Disc) {
  const std::vector<Disc> discs{{{5, 0}, 1.0}};
  const auto hit = ray_cast({0, 0}, {1, 0}, 25.0, ObstacleSet{}, discs);
  ASSERT_TRUE(hit.has_value());
  EXPECT_NEAR(*hit, 4.0, kTol);
}

TEST(RayCastTest, RejectsNonUnitDirection) {
  EXPECT_THROW(ray_cast({0, 0}, {2, 0}, 25.0, ObstacleSet{}, {}), InvalidDirection);
}

TEST(RayCastTest, BeyondRangeIsNoHit) {
  const ObstacleSet walls({{{10, -1}, {10, 1}}});
  EXPECT_FALSE(ray_cast({0, 0}, {1, 0}, 9.99, walls, {}).has_value());
  EXPECT_TRUE(ray_cast({0, 0}, {1, 0}, 10.0, walls, {}).has_value());
}

TEST(RayCastTest, CollinearSegmentHitsNearEndpoint) {
  const ObstacleSet walls({{{3, 0}, {7, 0}}});
  const auto hit = ray_cast({0, 0}, {1, 0}, 25.0, walls, {});
  ASSERT_TRUE(hit.has_value());
  EXPECT_DOUBLE_EQ(*hit, 3.0);
}

TEST(RayCastTest, DiscBehindOriginIgnored) {
  const std::vector<Disc> discs{{{-5, 0}, 1.0}};
  EXPECT_FALSE(ray_cast({0, 0}, {1, 0}, 25.0, ObstacleSet{}, discs).has_value());
}

struct RandomWorld {
  ObstacleSet walls;
  std::vector<Disc> discs;
};

RandomWorld random_world(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coord(-10.0, 10.0);
  std::uniform_real_distribution<double> radius(0.1, 1.0);
  std::vector<Segment> segs;
  for (int i = 0; i < 8; ++i) segs.push_back({{coord(rng), coord(rng)}, {coord(rng), coord(rng)}});
  RandomWorld w{ObstacleSet(std::move(segs)), {}};
  for (int i = 0; i < 6; ++i) {
    const Vec2 c{coord(rng), coord(rng)};
    if (c.norm() > 1.5) w.discs.push_back({c, radius(rng)});
  }
  return w;
}

double feature_distance(const RandomWorld& w, const Vec2& p) {
  double best = w.walls.clearance(p);
  for (const auto& d : w.discs) best = std::min(best, std::abs((p - d.center).norm() - d.radius));
  return best;
}

TEST(RayCastTest, HitPointLiesOnAFeature) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> angle(-M_PI, M_PI);
  int hits = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const auto world = random_world(rng);
    const double a = angle(rng);
    const Vec2 dir{std::cos(a), std::sin(a)};
    const auto hit = ray_cast({0, 0}, dir, 30.0, world.walls, world.discs);
    if (!hit) continue;
    ++hits;
    EXPECT_LE(feature_distance(world, dir * *hit), 1e-9);
  }
  EXPECT_GT(hits, 500);
}

TEST(RayCastTest, TruncatingRangeNeverMovesAHit) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> angle(-M_PI, M_PI);
  std::uniform_real_distribution<double> frac(0.0, 2.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto world = random_world(rng);
    const double a = angle(rng);
    const Vec2 dir{std::cos(a), std::sin(a)};
    const auto full = ray_cast({0, 0}, dir, 30.0, world.walls, world.discs);
    if (!full) continue;
    const double range = *full * frac(rng);
    const auto cut = ray_cast({0, 0}, dir, range, world.walls, world.discs);
    if (range < *full) {
      EXPECT_FALSE(cut.has_value());
    } else {
      ASSERT_TRUE(cut.has_value());
      EXPECT_EQ(*cut, *full);
    }
  }
}

TEST(RasterizeTest, HorizontalSegmentCoverage) {
  const ObstacleSet walls({{{0.05, 0.55}, {1.05, 0.55}}});
  const auto grid = rasterize(walls, 0.1, 0.0, Rect{{0, 0}, {2, 2}});
  EXPECT_GE(grid.occupied_count(), 10u);
}

TEST(RasterizeTest, EmptyWithExplicitBounds) {
  const auto grid = rasterize(ObstacleSet{}, 1.0, 0.0, Rect{{0, 0}, {10, 10}});
  EXPECT_EQ(grid.width(), 10);
  EXPECT_EQ(grid.height(), 10);
  EXPECT_EQ(grid.cell_count(), 100u);
  EXPECT_EQ(grid.occupied_count(), 0u);
}

TEST(RasterizeTest, DegenerateBoundsRejected) {
  EXPECT_THROW(rasterize(ObstacleSet{}, 1.0, 0.0), EmptyBounds);
  EXPECT_THROW(rasterize(ObstacleSet({{{0, 0}, {5, 0}}}), 1.0, 0.0), EmptyBounds);
}

TEST(RasterizeTest, DiagonalSegmentDenseSamples) {
  const Segment seg{{0, 0}, {3, 3}};
  const auto grid = rasterize(ObstacleSet({seg}), 0.5, 0.25, Rect{{-1, -1}, {4, 4}});
  const double length = seg.length();
  const int samples = static_cast<int>(length / 0.001);
  for (int i = 0; i <= samples; ++i) {
    const Vec2 p = seg.a + (seg.b - seg.a) * (static_cast<double>(i) / samples);
    const Cell c = grid.cell_of(p);
    ASSERT_TRUE(grid.in_bounds(c));
    ASSERT_TRUE(grid.occupied(c)) << "sample " << i;
  }
}

TEST(RasterizeTest, InflatedPointsAreConservative) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> coord(0.5, 19.5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Segment> segs;
  for (int i = 0; i < 12; ++i) segs.push_back({{coord(rng), coord(rng)}, {coord(rng), coord(rng)}});
  const ObstacleSet walls(segs);
  const double inflation = 0.3;
  const auto grid = rasterize(walls, 0.25, inflation, Rect{{-1, -1}, {21, 21}});
  for (int i = 0; i < 10000; ++i) {
    const auto& s = segs[static_cast<std::size_t>(i) % segs.size()];
    const double angle = 2.0 * M_PI * unit(rng);
    const Vec2 p = s.a + (s.b - s.a) * unit(rng) + Vec2{std::cos(angle), std::sin(angle)} * (inflation * unit(rng));
    ASSERT_TRUE(grid.occupied(grid.cell_of(p))) << p.x << "," << p.y;
  }
}

TEST(GeometryTest, WrapAngle) {
  EXPECT_DOUBLE_EQ(wrap_angle(M_PI), M_PI);
  EXPECT_DOUBLE_EQ(wrap_angle(-M_PI), M_PI);
  EXPECT_NEAR(wrap_angle(3 * M_PI / 2), -M_PI / 2, kTol);
}

TEST(GeometryTest, SegmentBoxDistance) {
  const Rect box{{0, 0}, {1, 1}};
  EXPECT_DOUBLE_EQ(distance(Segment{{2, 0.5}, {3, 0.5}}, box), 1.0);
  EXPECT_DOUBLE_EQ(distance(Segment{{-1, 0.5}, {2, 0.5}}, box), 0.0);
  EXPECT_NEAR(distance(Segment{{2, 2}, {3, 3}}, box), std::sqrt(2.0), kTol);
}

}  // namespace
}  // namespace crowdsim
