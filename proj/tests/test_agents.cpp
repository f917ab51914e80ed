#include <gtest/gtest.h>

#include "dmu/agents.hpp"
#include "dmu/blackboard.hpp"
#include "oracles.hpp"

using namespace dmu;

namespace
{

WorldState manikin_world(const Vec3& target)
{
  WorldState w;
  w.manikin.trunk_height = 1.0;
  w.manikin.footprint = Polygon2::rectangle(0, 0, 0.4, 0.4);
  w.target.position = target;
  w.target.size = 0.05;
  w.refresh_cone();
  return w;
}

}  // namespace

TEST(Attraction, AlignedApproach)
{
  WorldState w = manikin_world({5, 0, 1});
  w.manikin.trunk.theta = -kPi / 2;  // forward (+y rotated) points at +x
  const auto c = attraction_step(w);
  EXPECT_GT(c.d_trunk.x(), 0.0);
  EXPECT_NEAR(c.d_trunk.y(), 0.0, 1e-15);
  EXPECT_NEAR(c.d_trunk.z(), 0.0, 1e-12);
}

TEST(Attraction, StopsInsideRadius)
{
  WorldState w = manikin_world({0.03, 0, 1});
  const auto c = attraction_step(w, {.stop_radius = 0.05});
  EXPECT_EQ(c.d_trunk.x(), 0.0);
  EXPECT_EQ(c.d_trunk.y(), 0.0);
}

TEST(Attraction, ShortestRotationOverAllHeadings)
{
  for (int deg = -179; deg <= 180; ++deg)
  {
    WorldState w = manikin_world({0, -3, 1});
    w.manikin.trunk.theta = wrap_angle(deg2rad(deg));
    const auto c = attraction_step(w);
    // Heading of the target minus heading of the forward axis, reduced to
    // (-180°, 180°] by hand.
    double want = -90.0 - (deg + 90.0);
    while (want <= -180.0) want += 360.0;
    while (want > 180.0) want -= 360.0;
    EXPECT_NEAR(c.d_trunk.z(), deg2rad(want), 1e-9) << deg;
    EXPECT_LE(std::abs(c.d_trunk.z()), kPi);
  }
}

TEST(Attraction, AloneDecreasesDistanceMonotonically)
{
  WorldState w = manikin_world({1.0, 2.0, 1});
  Blackboard b;
  AgentDescriptor d{"Attraction", 1, true, 0.05, deg2rad(5)};
  b.register_agent(d, make_agent(AgentKind::kAttraction));
  double prev = (w.target.position.head<2>() - w.manikin.trunk.position()).norm();
  for (int i = 0; i < 200 && prev > 0.05; ++i)
  {
    w = b.run_tick(w).world;
    const double now = (w.target.position.head<2>() - w.manikin.trunk.position()).norm();
    EXPECT_LT(now, prev);
    prev = now;
  }
  EXPECT_LE(prev, 0.05);
}

TEST(Attraction, RobotJointsHeadForIkSolution)
{
  WorldState w;
  RobotModel r;
  r.link_lengths = {1.0, 1.0};
  r.q = Eigen::Vector2d{0.1, 0.4};
  r.limits = {JointLimit{}, JointLimit{}};
  w.robot = r;
  w.subject = Subject::kRobot;
  w.target.position = {0.0, 1.5, 0.0};
  w.refresh_cone();
  const auto c = attraction_step(w, {.stop_radius = 10.0});
  ASSERT_EQ(c.d_joints.size(), 2);
  const auto ik = ik_planar_preserving_aspect(r, {0.0, 1.5});
  EXPECT_NEAR(c.d_joints[0], wrap_angle(ik.q[0] - 0.1), 1e-12);
  EXPECT_NEAR(c.d_joints[1], wrap_angle(ik.q[1] - 0.4), 1e-12);
}

TEST(Repulsion, ZeroWhenDisjoint)
{
  WorldState w = manikin_world({0, 5, 1});
  w.scene.polygons.push_back(Polygon2::rectangle(3, 0, 1, 1));
  EXPECT_TRUE(repulsion_step(w).is_zero());
}

TEST(Repulsion, PushesAwayFromObstacleOnPlusX)
{
  WorldState w = manikin_world({0, 5, 1});
  w.scene.polygons.push_back(Polygon2::rectangle(0.5, 0.05, 0.8, 0.6));
  const auto c = repulsion_step(w);
  EXPECT_LT(c.d_trunk.x(), 0.0);
  // Analytic rectangle-overlap slope, pose fixed at the origin.
  const oracle::Rect body{0, 0, 0.4, 0.4};
  const oracle::Rect obs{0.5, 0.05, 0.8, 0.6};
  const auto g = oracle::rect_overlap_gradient(body, obs);
  EXPECT_NEAR(c.d_trunk.x(), -g.x(), 1e-6);
  EXPECT_NEAR(c.d_trunk.y(), -g.y(), 1e-6);
}

TEST(Repulsion, SymmetricStraddleHasNoLateralPush)
{
  WorldState w = manikin_world({0, 5, 1});
  w.scene.polygons.push_back(Polygon2::rectangle(0.3, 0.0, 0.4, 1.0));
  const auto c = repulsion_step(w);
  EXPECT_NEAR(c.d_trunk.y(), 0.0, 1e-6);
}

TEST(Repulsion, ZeroExactlyWhenPerimeterIsZero)
{
  oracle::Rng rng(4);
  for (int i = 0; i < 100; ++i)
  {
    WorldState w = manikin_world({0, 5, 1});
    w.manikin.trunk = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-3, 3)};
    w.scene.polygons.push_back(Polygon2::rectangle(0, 0, 0.5, 0.5));
    const bool overlap = collision_length(w) > 0.0;
    EXPECT_EQ(!repulsion_step(w).is_zero(), overlap);
  }
}

TEST(HeadOrientation, ZeroOnAxisAtNeutral)
{
  WorldState w = manikin_world({0, 3, 1});
  EXPECT_TRUE(head_orientation_step(w).is_zero());
}

TEST(HeadOrientation, LargeYawIsClampedToLimit)
{
  WorldState w = manikin_world({-3, 0, 1});  // 90° to the left
  const auto c = head_orientation_step(w);
  EXPECT_GT(c.d_head.z(), 0.0);
  EXPECT_LE(w.manikin.head.theta + c.d_head.z(), w.manikin.limits.theta.hi + 1e-15);
  EXPECT_EQ(c.d_head.y(), 0.0);
}

TEST(HeadOrientation, SmallYawIsLinearInGain)
{
  const double k = 0.7;
  for (double deg : {1.0, 2.0, 4.0})
  {
    const double e = deg2rad(deg);
    WorldState w = manikin_world({-3 * std::sin(e), 3 * std::cos(e), 1});
    const auto c = head_orientation_step(w, {.gain = k});
    EXPECT_NEAR(c.d_head.z(), k * e, 1e-12) << deg;
  }
}

TEST(HeadOrientation, OnTargetTradesHeadYawForTrunkYaw)
{
  WorldState w = manikin_world({0, 3, 1});
  w.manikin.trunk.theta = -0.2;
  w.manikin.head.theta = 0.2;
  ASSERT_LT(gaze_error(w), 1e-9);
  const auto c = head_orientation_step(w, {.neutral_gain = 0.5});
  EXPECT_NEAR(c.d_head.z(), -0.1, 1e-12);
  EXPECT_NEAR(c.d_trunk.z(), 0.1, 1e-12);
}

TEST(HeadOrientation, NeverProposesOutOfLimitPose)
{
  oracle::Rng rng(8);
  for (int i = 0; i < 300; ++i)
  {
    WorldState w = manikin_world(rng.vector(3, -3, 3));
    w.manikin.head = {rng.uniform(-0.7, 1.0), 0.0, rng.uniform(-1.0, 1.0)};
    const auto c = head_orientation_step(w);
    const HeadLimits& l = w.manikin.limits;
    EXPECT_GE(w.manikin.head.alpha + c.d_head.x(), l.alpha.lo - 1e-15);
    EXPECT_LE(w.manikin.head.alpha + c.d_head.x(), l.alpha.hi + 1e-15);
    EXPECT_GE(w.manikin.head.theta + c.d_head.z(), l.theta.lo - 1e-15);
    EXPECT_LE(w.manikin.head.theta + c.d_head.z(), l.theta.hi + 1e-15);
  }
}

TEST(Visibility, ClearSightWidensCone)
{
  WorldState w = manikin_world({0, 3, 1});
  w.target.size = 1.0;
  w.refresh_cone();
  const auto c = visibility_step(w);
  EXPECT_EQ(c.d_trunk, Vec3::Zero());
  EXPECT_NEAR(c.d_cone, deg2rad(1.0), 1e-15);
}

TEST(Visibility, CapAtMaximum)
{
  WorldState w = manikin_world({0, 3, 1});
  w.target.size = 10.0;
  w.cone.aperture = w.cone_limits.max_aperture;
  w.refresh_cone();
  EXPECT_EQ(visibility_step(w).d_cone, 0.0);
}

TEST(Visibility, GazeOutsideConeNarrowsToMinimum)
{
  WorldState w = manikin_world({-3, 0, 1});
  w.cone.aperture = w.cone_limits.min_aperture;
  w.refresh_cone();
  EXPECT_EQ(visibility_step(w).d_cone, 0.0);
  w.target.size = 3.0;
  w.cone.aperture = deg2rad(10);
  w.refresh_cone();
  EXPECT_NEAR(visibility_step(w).d_cone, -deg2rad(1.0), 1e-15);
}

TEST(Visibility, TrunkMovesSightLineOffTheBox)
{
  WorldState w = manikin_world({0, 3, 1});
  // Box slightly to +x of the sight line between eye and target.
  w.scene.boxes.push_back(Box3{{0.1, 1.5, 1.0}, {0.15, 0.1, 0.5}});
  ASSERT_GT(st_occlusion(w), 0.0);
  const auto c = visibility_step(w);
  const double h = 1e-4;
  auto occ = [&](double dx) {
    PlanarPose p = w.manikin.trunk;
    p.x += dx;
    return st_occlusion_at(w, p) + cone_occlusion_at(w, p);
  };
  const double fd = (occ(h) - occ(-h)) / (2 * h);
  EXPECT_LT(c.d_trunk.x(), 0.0);
  EXPECT_NEAR(c.d_trunk.x(), -fd, 1e-9);
}

TEST(Visibility, ApertureStaysInRangeOverARun)
{
  WorldState w = manikin_world({0.5, 2, 1});
  w.scene.boxes.push_back(Box3{{0.2, 1.0, 1.0}, {0.1, 0.1, 0.3}});
  Blackboard b;
  b.register_agent({"Visibility", 1, true, 0.01, deg2rad(2)}, make_agent(AgentKind::kVisibility));
  b.register_agent({"Head", 2, true, 0.01, deg2rad(2)}, make_agent(AgentKind::kHeadOrientation));
  for (int i = 0; i < 300; ++i)
  {
    w = b.run_tick(w).world;
    EXPECT_GE(w.cone.aperture, w.cone_limits.min_aperture);
    EXPECT_LE(w.cone.aperture, w.cone_limits.max_aperture);
  }
}

TEST(Operator, PassthroughAndLatestWins)
{
  WorldState w = manikin_world({0, 3, 1});
  OperatorQueue q;
  AgentContext ctx;
  EXPECT_TRUE(operator_step(w, q, ctx).is_zero());

  q.push({{0.3, 0.0}, 0.1, 0.0});
  auto c = operator_step(w, q, ctx);
  EXPECT_EQ(c.d_trunk, Vec3(0.3, 0.0, 0.1));
  EXPECT_EQ(ctx.dropped_inputs, 0u);

  q.push({{1, 0}, 0, 1});
  q.push({{2, 0}, 0, 2});
  q.push({{3, 0}, 0, 3});
  c = operator_step(w, q, ctx);
  EXPECT_EQ(c.d_trunk.x(), 3.0);
  EXPECT_EQ(ctx.dropped_inputs, 2u);
  EXPECT_EQ(q.pending(), 0u);
}

TEST(Operator, RejectsNonFiniteInput)
{
  OperatorQueue q;
  EXPECT_THROW(q.push({{std::nan(""), 0}, 0, 0}), InvalidInput);
  EXPECT_THROW(make_agent(AgentKind::kOperator), InvalidInput);
}

TEST(Operator, DropCountReachesTheTickLog)
{
  auto q = std::make_shared<OperatorQueue>();
  Blackboard b;
  b.register_agent({"Operator", 1, true, 0.05, 0.1}, make_agent(AgentKind::kOperator, {}, q));
  q->push({{0.01, 0}, 0, 0});
  q->push({{0.02, 0}, 0, 1});
  const auto r = b.run_tick(manikin_world({0, 3, 1}));
  EXPECT_EQ(r.log.agents[0].dropped_inputs, 1u);
  EXPECT_EQ(r.world.manikin.trunk.x, 0.02);
}

TEST(Agents, DisablingOneLeavesOthersUnchanged)
{
  WorldState w = manikin_world({0.5, 2, 1});
  w.scene.polygons.push_back(Polygon2::rectangle(0.2, 0.1, 0.3, 0.3));
  const auto all = [](bool with_repulsion) {
    Blackboard b;
    b.register_agent({"Attraction", 1, true, 0.05, 0.1}, make_agent(AgentKind::kAttraction));
    AgentDescriptor rep{"Repulsion", 1, with_repulsion, 0.05, 0.1};
    b.register_agent(rep, make_agent(AgentKind::kRepulsion));
    return b;
  };
  Blackboard on = all(true);
  Blackboard off = all(false);
  const auto a = on.run_tick(w).log.agents[0].raw;
  const auto b = off.run_tick(w).log.agents[0].raw;
  EXPECT_EQ(a.d_trunk, b.d_trunk);
}
