#include <gtest/gtest.h>

#include <sstream>

#include "dmu/blackboard.hpp"
#include "dmu/tick_log.hpp"
#include "oracles.hpp"

using namespace dmu;

namespace
{

AgentDescriptor desc(const std::string& name, std::uint32_t rate, double dpos = 0.05, double dor = 0.1)
{
  AgentDescriptor d;
  d.name = name;
  d.rate = rate;
  d.delta_pos = dpos;
  d.delta_or = dor;
  return d;
}

WorldState empty_world()
{
  WorldState w;
  w.target.position = {0, 5, 1};
  w.refresh_cone();
  return w;
}

struct Counter
{
  int calls = 0;
  AgentStepFn fn()
  {
    return [this](const WorldState&, AgentContext&) {
      ++calls;
      return Contribution{};
    };
  }
};

void run(Blackboard& b, WorldState& w, int ticks)
{
  for (int i = 0; i < ticks; ++i)
  {
    w = b.run_tick(w).world;
  }
}

}  // namespace

TEST(Normalize, WorkedExamples)
{
  Contribution c;
  c.d_trunk = {3, 4, 0};
  auto n = normalize_contribution(c, 1.0, 1.0);
  EXPECT_NEAR(n.d_trunk.x(), 0.6, 1e-15);
  EXPECT_NEAR(n.d_trunk.y(), 0.8, 1e-15);

  c.d_trunk = {0.1, 0, 0};
  EXPECT_EQ(normalize_contribution(c, 1.0, 1.0).d_trunk, c.d_trunk);

  c.d_trunk = {0, 0, 0.5};
  EXPECT_EQ(normalize_contribution(c, 1.0, 0.2).d_trunk.z(), 0.2);

  EXPECT_TRUE(normalize_contribution(Contribution{}, 1.0, 1.0).is_zero());
}

TEST(Normalize, Errors)
{
  Contribution c;
  EXPECT_THROW(normalize_contribution(c, 0.0, 1.0), InvalidInput);
  EXPECT_THROW(normalize_contribution(c, 1.0, -1.0), InvalidInput);
  c.d_head.x() = std::nan("");
  EXPECT_THROW(normalize_contribution(c, 1.0, 1.0), EvaluationFailure);
}

TEST(Normalize, KeepsDirectionAndBounds)
{
  oracle::Rng rng(17);
  for (int i = 0; i < 5000; ++i)
  {
    Contribution c;
    const double scale = std::pow(10.0, rng.uniform(-6, 6));
    c.d_trunk = rng.vector(3) * scale;
    c.d_head = rng.vector(3) * scale;
    c.d_joints = rng.vector(4) * scale;
    c.d_cone = rng.uniform(-1, 1) * scale;
    const double dp = rng.uniform(1e-3, 1.0);
    const double dr = rng.uniform(1e-3, 1.0);
    const auto n = normalize_contribution(c, dp, dr);
    EXPECT_LE(n.d_trunk.head<2>().norm(), dp);
    const Eigen::Vector2d a = c.d_trunk.head<2>();
    const Eigen::Vector2d b = n.d_trunk.head<2>();
    EXPECT_NEAR(a.x() * b.y() - a.y() * b.x(), 0.0, 1e-12 * a.norm());
    EXPECT_GE(a.dot(b), 0.0);
    EXPECT_LE(n.d_head.cwiseAbs().maxCoeff(), dr);
    EXPECT_LE(n.d_joints.cwiseAbs().maxCoeff(), dr);
    EXPECT_LE(std::abs(n.d_cone), dr);
  }
}

TEST(Blackboard, RegisterValidatesAndRejectsDuplicates)
{
  Blackboard b;
  Counter c;
  b.register_agent(desc("A", 1), c.fn());
  EXPECT_THROW(b.register_agent(desc("A", 2), c.fn()), InvalidInput);
  EXPECT_THROW(b.register_agent(desc("B", 0), c.fn()), InvalidInput);
  EXPECT_THROW(b.register_agent(desc("C", 1, -1.0), c.fn()), InvalidInput);
  EXPECT_EQ(b.size(), 1u);
}

TEST(Blackboard, RateIsAPeriod)
{
  Blackboard b;
  Counter one, three, nine;
  b.register_agent(desc("one", 1), one.fn());
  b.register_agent(desc("three", 3), three.fn());
  b.register_agent(desc("nine", 9), nine.fn());
  WorldState w = empty_world();
  run(b, w, 9);
  EXPECT_EQ(one.calls, 9);
  EXPECT_EQ(three.calls, 3);
  EXPECT_EQ(nine.calls, 1);
  EXPECT_EQ(w.tick, 9u);
}

TEST(Blackboard, ActivationCountIsFloorOfTicksOverRate)
{
  for (std::uint32_t rate = 1; rate <= 7; ++rate)
  {
    for (int ticks : {1, 5, 13, 40})
    {
      Blackboard b;
      Counter c;
      b.register_agent(desc("a", rate), c.fn());
      WorldState w = empty_world();
      run(b, w, ticks);
      EXPECT_EQ(c.calls, ticks / static_cast<int>(rate));
    }
  }
}

TEST(Blackboard, DisabledAgentNeverRuns)
{
  Blackboard b;
  Counter c;
  auto d = desc("a", 1);
  d.enabled = false;
  b.register_agent(d, c.fn());
  WorldState w = empty_world();
  run(b, w, 10);
  EXPECT_EQ(c.calls, 0);
}

TEST(Blackboard, NoAgentsOnlyAdvancesTick)
{
  Blackboard b;
  const WorldState w = empty_world();
  const auto r = b.run_tick(w);
  EXPECT_EQ(r.world.tick, 1u);
  EXPECT_EQ(r.world.manikin.trunk.x, w.manikin.trunk.x);
  EXPECT_EQ(r.world.manikin.trunk.y, w.manikin.trunk.y);
  EXPECT_EQ(r.world.manikin.trunk.theta, w.manikin.trunk.theta);
}

TEST(Blackboard, OppositeContributionsCancel)
{
  Blackboard b;
  b.register_agent(desc("push", 1), [](const WorldState&) {
    Contribution c;
    c.d_trunk = {10, 0, 0};
    return c;
  });
  b.register_agent(desc("pull", 1), [](const WorldState&) {
    Contribution c;
    c.d_trunk = {-10, 0, 0};
    return c;
  });
  const auto r = b.run_tick(empty_world());
  EXPECT_EQ(r.world.manikin.trunk.x, 0.0);
  EXPECT_EQ(r.log.agents[0].normalized.d_trunk.x(), 0.05);
}

TEST(Blackboard, FailingAgentIsSkippedAndLogged)
{
  Blackboard b;
  b.register_agent(desc("bad", 1), [](const WorldState&) -> Contribution { throw EvaluationFailure("boom"); });
  b.register_agent(desc("nan", 1), [](const WorldState&) {
    Contribution c;
    c.d_trunk.x() = std::nan("");
    return c;
  });
  b.register_agent(desc("good", 1), [](const WorldState&) {
    Contribution c;
    c.d_trunk = {0.01, 0, 0};
    return c;
  });
  const auto r = b.run_tick(empty_world());
  EXPECT_TRUE(r.log.agents[0].failed);
  EXPECT_EQ(r.log.agents[0].error, "boom");
  EXPECT_TRUE(r.log.agents[1].failed);
  EXPECT_FALSE(r.log.agents[2].failed);
  EXPECT_NEAR(r.world.manikin.trunk.x, 0.01, 1e-15);
}

TEST(Blackboard, HeadJointsClampAfterSumming)
{
  Blackboard b;
  for (const char* n : {"a", "b", "c"})
  {
    b.register_agent(desc(n, 1, 0.05, 0.5), [](const WorldState&) {
      Contribution c;
      c.d_head.z() = 1.0;
      return c;
    });
  }
  WorldState w = empty_world();
  run(b, w, 3);
  EXPECT_EQ(w.manikin.head.theta, w.manikin.limits.theta.hi);
}

TEST(AgentControl, PauseStopsContributions)
{
  Blackboard b;
  Counter c;
  const auto h = b.register_agent(desc("a", 1), c.fn());
  WorldState w = empty_world();
  run(b, w, 3);
  b.set_agent_control(h, {.enabled = false});
  run(b, w, 3);
  EXPECT_EQ(c.calls, 3);
  b.set_agent_control(h, {.enabled = true});
  run(b, w, 2);
  EXPECT_EQ(c.calls, 5);
}

TEST(AgentControl, RateChangeFromThreeToOne)
{
  // Reference by direct simulation of the tick mod rate rule.
  auto expected = [](std::uint64_t from, int ticks, std::uint32_t rate) {
    int n = 0;
    for (std::uint64_t t = from + 1; t <= from + static_cast<std::uint64_t>(ticks); ++t)
    {
      n += t % rate == 0 ? 1 : 0;
    }
    return n;
  };
  Blackboard b;
  Counter c;
  const auto h = b.register_agent(desc("a", 3), c.fn());
  WorldState w = empty_world();
  run(b, w, 6);
  EXPECT_EQ(c.calls, expected(0, 6, 3));
  b.set_agent_control(h, {.rate = 1u});
  run(b, w, 6);
  EXPECT_EQ(c.calls - 2, expected(6, 6, 1));
  EXPECT_EQ(c.calls - 2, 6);
}

TEST(AgentControl, RejectedRequestKeepsPreviousValues)
{
  Blackboard b;
  Counter c;
  const auto h = b.register_agent(desc("a", 3), c.fn());
  EXPECT_THROW(b.set_agent_control(h, {.enabled = false, .rate = 0u}), InvalidInput);
  EXPECT_THROW(b.set_agent_control(h, {.delta_pos = -0.1}), InvalidInput);
  EXPECT_TRUE(b.descriptor(h).enabled);
  EXPECT_EQ(b.descriptor(h).rate, 3u);
  EXPECT_THROW(b.set_agent_control(AgentHandle{5}, {}), InvalidInput);
}

TEST(AgentControl, HalvedDeltaBoundsLaterMoves)
{
  Blackboard b;
  const auto h = b.register_agent(desc("a", 1, 0.1), [](const WorldState&) {
    Contribution c;
    c.d_trunk = {1, 1, 0};
    return c;
  });
  WorldState w = empty_world();
  auto r = b.run_tick(w);
  EXPECT_NEAR(r.log.agents[0].normalized.d_trunk.head<2>().norm(), 0.1, 1e-15);
  b.set_agent_control(h, {.delta_pos = 0.05});
  r = b.run_tick(r.world);
  EXPECT_LE(r.log.agents[0].normalized.d_trunk.head<2>().norm(), 0.05);
}

TEST(Blackboard, AgentsSeeTheSameSnapshot)
{
  // Agents communicate only through the board: within one tick every agent
  // reads the pre-tick state regardless of registration order.
  Blackboard b;
  std::vector<double> seen;
  for (const char* n : {"a", "b"})
  {
    b.register_agent(desc(n, 1), [&seen](const WorldState& w) {
      seen.push_back(w.manikin.trunk.x);
      Contribution c;
      c.d_trunk = {0.01, 0, 0};
      return c;
    });
  }
  b.run_tick(empty_world());
  ASSERT_EQ(seen.size(), 2u);
  EXPECT_EQ(seen[0], seen[1]);
}

TEST(TickLog, HeaderIsStable)
{
  std::ostringstream out;
  TickLogWriter w(out, {"A"}, 2);
  const auto h = w.header();
  const std::vector<std::string> head{"tick", "distance", "collision_length", "st_occlusion", "cone_occlusion",
                                      "cone_aperture", "lead_x", "lead_y", "lead_theta", "head_alpha",
                                      "head_beta", "head_theta", "A.active", "A.failed", "A.dx", "A.dy",
                                      "A.dtheta", "A.dalpha", "A.dbeta", "A.dtheta_b", "A.dcone", "A.dropped",
                                      "A.dq0", "A.dq1", "q0", "q1", "time", "energy_external",
                                      "energy_internal", "condition", "contact_count", "max_penetration",
                                      "impulse_norm", "guide_angle", "guide_energy", "probe_height",
                                      "obstacle_height", "regularized"};
  EXPECT_EQ(h, head);
  std::string first_line;
  std::istringstream in(out.str());
  std::getline(in, first_line);
  EXPECT_EQ(std::count(first_line.begin(), first_line.end(), ','), static_cast<long>(head.size() - 1));
}

TEST(TickLog, DoublesRoundTrip)
{
  oracle::Rng rng(2);
  for (int i = 0; i < 1000; ++i)
  {
    const double v = rng.uniform(-1, 1) * std::pow(10.0, rng.uniform(-20, 20));
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.0), "0");
}
