#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "dmu/geometry.hpp"
#include "oracles.hpp"

using namespace dmu;

namespace
{

Polygon2 unit_square(double cx, double cy) { return Polygon2::rectangle(cx, cy, 1.0, 1.0); }

// Independent slab test for one axis-aligned box.
double clip_length(const Segment3& s, const Vec3& lo, const Vec3& hi)
{
  double t0 = 0.0;
  double t1 = 1.0;
  const Vec3 d = s.b - s.a;
  for (int k = 0; k < 3; ++k)
  {
    if (d[k] == 0.0)
    {
      if (s.a[k] < lo[k] || s.a[k] > hi[k])
      {
        return 0.0;
      }
      continue;
    }
    double ta = (lo[k] - s.a[k]) / d[k];
    double tb = (hi[k] - s.a[k]) / d[k];
    if (ta > tb)
    {
      std::swap(ta, tb);
    }
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  return t1 > t0 ? (t1 - t0) * d.norm() : 0.0;
}

}  // namespace

TEST(WrapAngle, Conventions)
{
  EXPECT_EQ(wrap_angle(0.0), 0.0);
  EXPECT_NEAR(wrap_angle(3.0 * kPi), kPi, 1e-12);
  EXPECT_EQ(wrap_angle(-kPi), kPi);
  oracle::Rng rng(3);
  for (int i = 0; i < 1000; ++i)
  {
    const double a = rng.uniform(-100.0, 100.0);
    const double w = wrap_angle(a);
    EXPECT_GT(w, -kPi);
    EXPECT_LE(w, kPi);
    EXPECT_EQ(wrap_angle(w), w);
    const double turns = (a - w) / (2.0 * kPi);
    EXPECT_NEAR(turns, std::round(turns), 1e-9);
  }
}

TEST(Polygon, RejectsDegenerateAndSelfIntersecting)
{
  EXPECT_THROW(Polygon2({{0, 0}, {1, 0}}), InvalidInput);
  EXPECT_THROW(Polygon2({{0, 0}, {1, 0}, {2, 0}}), InvalidInput);
  EXPECT_THROW(Polygon2({{0, 0}, {1, 1}, {1, 0}, {0, 1}}), InvalidInput);
}

TEST(Polygon, ClockwiseInputIsReoriented)
{
  const Polygon2 cw({{0, 0}, {0, 1}, {1, 1}, {1, 0}});
  EXPECT_NEAR(cw.area(), 1.0, 1e-12);
}

TEST(OverlapLength, WorkedExamples)
{
  EXPECT_EQ(polygon_overlap_length(unit_square(0, 0), unit_square(3, 0)), 0.0);
  EXPECT_NEAR(polygon_overlap_length(unit_square(0, 0), unit_square(0, 0)), 4.0, 1e-12);
  EXPECT_NEAR(polygon_overlap_length(unit_square(0, 0), unit_square(0.5, 0)), 3.0, 1e-12);
}

TEST(OverlapLength, MatchesRectangleClippingOracle)
{
  oracle::Rng rng(11);
  for (int i = 0; i < 500; ++i)
  {
    const oracle::Rect a{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.1, 1.5), rng.uniform(0.1, 1.5)};
    const oracle::Rect b{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.1, 1.5), rng.uniform(0.1, 1.5)};
    const double got = polygon_overlap_length(Polygon2::rectangle(a.cx, a.cy, a.w, a.h),
                                              Polygon2::rectangle(b.cx, b.cy, b.w, b.h));
    EXPECT_NEAR(got, oracle::rect_overlap_perimeter(a, b), 1e-12);
  }
}

TEST(OverlapLength, SymmetricAndNonNegative)
{
  oracle::Rng rng(12);
  for (int i = 0; i < 200; ++i)
  {
    const Polygon2 a = Polygon2::rectangle(0, 0, 1, 0.6).transformed({rng.uniform(-1, 1), rng.uniform(-1, 1),
                                                                        rng.uniform(-kPi, kPi)});
    const Polygon2 b({{0, 0}, {0.8, -0.2}, {1.0, 0.5}, {0.2, 0.9}});
    const double ab = polygon_overlap_length(a, b);
    EXPECT_GE(ab, 0.0);
    EXPECT_NEAR(ab, polygon_overlap_length(b, a), 1e-12);
  }
}

TEST(OverlapLength, ZeroIffGridSamplerFindsNoOverlap)
{
  oracle::Rng rng(13);
  const Polygon2 b({{0, 0}, {0.3, -0.1}, {0.4, 0.3}, {0.05, 0.35}});
  for (int i = 0; i < 20; ++i)
  {
    const Polygon2 a = Polygon2::rectangle(0, 0, 0.2, 0.1).transformed(
        {rng.uniform(-0.3, 0.7), rng.uniform(-0.3, 0.7), rng.uniform(-kPi, kPi)});
    bool sampled = false;
    for (double x = -0.5; x <= 1.0 && !sampled; x += 1e-3)
    {
      for (double y = -0.5; y <= 1.0; y += 1e-3)
      {
        if (a.contains({x, y}) && b.contains({x, y}))
        {
          sampled = true;
          break;
        }
      }
    }
    EXPECT_EQ(polygon_overlap_length(a, b) > 0.0, sampled) << "case " << i;
  }
}

TEST(OverlapLength, ContinuousInPoseWhileOverlapping)
{
  // The perimeter of a thin sliver does not vanish with its area: at first
  // contact the value jumps from 0 to twice the shared edge. Elsewhere it
  // moves at most by 2 per unit of translation.
  const Polygon2 b = unit_square(0, 0);
  double prev = polygon_overlap_length(unit_square(-1.2, 0.3), b);
  int jumps = 0;
  for (double x = -1.2; x <= 1.2; x += 1e-3)
  {
    const double v = polygon_overlap_length(unit_square(x, 0.3), b);
    if ((prev == 0.0) != (v == 0.0))
    {
      EXPECT_NEAR(std::max(v, prev), 2.0 * 0.7, 2.0 * 1e-3 + 1e-12);
      ++jumps;
    }
    else
    {
      EXPECT_LE(std::abs(v - prev), 2.0 * 1e-3 + 1e-12);
    }
    prev = v;
  }
  EXPECT_EQ(jumps, 2);
}

TEST(SegmentOcclusion, WorkedExamples)
{
  const std::vector<Box3> unit{Box3::from_bounds({-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5})};
  EXPECT_EQ(segment_occlusion_length({{2, 2, 2}, {3, 3, 3}}, unit), 0.0);
  const std::vector<Box3> big{Box3::from_bounds({-5, -5, -5}, {5, 5, 5})};
  EXPECT_NEAR(segment_occlusion_length({{-1, 0, 0}, {1, 0, 0}}, big), 2.0, 1e-12);
  EXPECT_NEAR(segment_occlusion_length({{-1.5, 0, 0}, {1.5, 0, 0}}, unit), 1.0, 1e-12);
  EXPECT_EQ(segment_occlusion_length({{0, 0, 0}, {0, 0, 0}}, unit), 0.0);
}

TEST(SegmentOcclusion, UnionWithoutDoubleCounting)
{
  const std::vector<Box3> two{Box3::from_bounds({-0.5, -1, -1}, {0.5, 1, 1}),
                              Box3::from_bounds({0.0, -1, -1}, {1.0, 1, 1})};
  EXPECT_NEAR(segment_occlusion_length({{-2, 0, 0}, {2, 0, 0}}, two), 1.5, 1e-12);
}

TEST(SegmentOcclusion, MatchesSlabOracleOnRandomSegments)
{
  oracle::Rng rng(21);
  const Vec3 lo{-0.3, -0.2, 0.1};
  const Vec3 hi{0.4, 0.5, 0.6};
  const std::vector<Box3> boxes{Box3::from_bounds(lo, hi)};
  for (int i = 0; i < 500; ++i)
  {
    const Segment3 s{rng.vector(3), rng.vector(3)};
    const double got = segment_occlusion_length(s, boxes);
    EXPECT_NEAR(got, clip_length(s, lo, hi), 1e-12);
    EXPECT_LE(got, s.length() + 1e-12);
  }
}

TEST(SegmentOcclusion, YawedBoxAgreesWithRotatedFrame)
{
  // A 45° box seen along its diagonal direction.
  const Box3 box{{0, 0, 0}, {0.5, 0.5, 0.5}, kPi / 4};
  const Segment3 along{{-2, 0, 0}, {2, 0, 0}};
  const double expected = std::sqrt(2.0);  // diagonal of the unit square
  EXPECT_NEAR(segment_occlusion_length(along, std::vector<Box3>{box}), expected, 1e-12);
}

TEST(SegmentOcclusion, MonotoneInBoxSize)
{
  const Segment3 s{{-1, 0.1, 0.2}, {1.2, -0.3, 0.1}};
  double prev = 0.0;
  for (double h = 0.05; h < 2.0; h += 0.05)
  {
    const double v = segment_occlusion_length(s, std::vector<Box3>{Box3{{0.1, 0, 0.1}, {h, h, h}}});
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(ConeOcclusion, WorkedExamples)
{
  const Cone c{{0, 0, 0}, {0, 1, 0}, deg2rad(10.0), 1.0};
  EXPECT_EQ(cone_occlusion_length(c, {}), 0.0);
  const std::vector<Box3> huge{Box3::from_bounds({-10, -10, -10}, {10, 10, 10})};
  EXPECT_NEAR(cone_occlusion_length(c, huge), c.slant_length(), 1e-12);
}

TEST(ConeOcclusion, HalfTheRaysBlocked)
{
  // Vertical cone, six rays 60° apart. A yawed box filling the half space on
  // the side of the first ray swallows rays 0, 1 and 5 whole and misses the
  // other three.
  const Cone c{{0, 0, 0}, {0, 0, 1}, deg2rad(20.0), 1.0};
  const auto rays = cone_surface_rays(c, 6);
  ASSERT_EQ(rays.size(), 6u);
  Vec3 n = rays[0].b - rays[0].a;
  n.z() = 0.0;
  n.normalize();
  const std::vector<Box3> half{Box3{5.0 * n, {5.0, 10.0, 10.0}, std::atan2(n.y(), n.x())}};

  double sum = 0.0;
  int blocked = 0;
  for (const auto& r : rays)
  {
    const double v = segment_occlusion_length(r, half);
    sum += v;
    blocked += v > 0.0 ? 1 : 0;
  }
  EXPECT_EQ(blocked, 3);
  EXPECT_NEAR(cone_occlusion_length(c, half, 6), sum / 6.0, 1e-12);
  EXPECT_NEAR(cone_occlusion_length(c, half, 6), 0.5 * c.slant_length(), 1e-12);
}

TEST(ConeOcclusion, RaysLieOnTheConeSurface)
{
  const Cone c{{0.1, 0.2, 0.3}, Vec3{1, 1, 0}.normalized(), deg2rad(15.0), 2.0};
  for (const auto& r : cone_surface_rays(c, 12))
  {
    const Vec3 d = (r.b - r.a).normalized();
    EXPECT_NEAR(std::acos(d.dot(c.axis)), c.aperture, 1e-12);
    EXPECT_NEAR(r.length(), c.slant_length(), 1e-12);
  }
}

TEST(FiniteDiff, TrivialCases)
{
  const Vec3 g0 = finite_diff_gradient([](const PlanarPose&) { return 1.5; }, {0.2, 0.3, 0.1});
  EXPECT_EQ(g0, Vec3::Zero());
  const Vec3 g = finite_diff_gradient([](const PlanarPose& p) { return 2.0 * p.x; }, {0.2, 0.3, 0.1});
  EXPECT_NEAR(g.x(), 2.0, 1e-9);
  EXPECT_NEAR(g.y(), 0.0, 1e-9);
  EXPECT_NEAR(g.z(), 0.0, 1e-9);
}

TEST(FiniteDiff, NonFiniteIsAnEvaluationFailure)
{
  EXPECT_THROW(finite_diff_gradient([](const PlanarPose&) { return std::nan(""); }, {}), EvaluationFailure);
  EXPECT_THROW(finite_diff_gradient([](const PlanarPose& p) { return 1.0 / 0.0 * p.x; }, {1, 0, 0}),
               EvaluationFailure);
  EXPECT_THROW(finite_diff_gradient([](const PlanarPose&) { return 0.0; }, {}, {0.0, 1e-4, 1e-4}), InvalidInput);
}

TEST(FiniteDiff, SecondOrderAccuracy)
{
  // Cubic criterion: the central-difference error is h²/6 · f''' exactly.
  auto c = [](const PlanarPose& p) { return p.x * p.x * p.x + std::sin(p.y) + 0.5 * p.theta * p.theta; };
  const PlanarPose p{0.7, 0.4, 0.2};
  const Vec3 exact{3 * 0.7 * 0.7, std::cos(0.4), 0.2};
  const double h = 1e-2;
  const double e1 = (finite_diff_gradient(c, p, {h, h, h}) - exact).norm();
  const double e2 = (finite_diff_gradient(c, p, {h / 2, h / 2, h / 2}) - exact).norm();
  EXPECT_NEAR(e1 / e2, 4.0, 0.05);
}

TEST(FiniteDiff, RectangleOverlapMatchesAnalyticGradient)
{
  oracle::Rng rng(31);
  const oracle::Rect obstacle{0.0, 0.0, 1.0, 0.6};
  const Polygon2 obs = Polygon2::rectangle(obstacle.cx, obstacle.cy, obstacle.w, obstacle.h);
  int checked = 0;
  while (checked < 200)
  {
    const oracle::Rect body{rng.uniform(-0.8, 0.8), rng.uniform(-0.6, 0.6), 0.4, 0.3};
    if (oracle::rect_overlap_perimeter(body, obstacle) == 0.0 || oracle::rect_edge_clearance(body, obstacle) < 1e-3)
    {
      continue;
    }
    const Polygon2 shape = Polygon2::rectangle(0, 0, body.w, body.h);
    const Vec3 g = finite_diff_gradient(
        [&](const PlanarPose& p) { return polygon_overlap_length(shape.transformed(p), obs); },
        {body.cx, body.cy, 0.0});
    const Eigen::Vector2d expected = oracle::rect_overlap_gradient(body, obstacle);
    EXPECT_LE((g.head<2>() - expected).norm(), 1e-6 * std::max(1.0, expected.norm()));
    ++checked;
  }
}
