// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "dmu/agents.hpp"
#include "dmu/blackboard.hpp"
#include "dmu/constraints.hpp"
#include "dmu/dynamics.hpp"
#include "dmu/headless.hpp"
#include "dmu/kinematics.hpp"
#include "oracles.hpp"

using namespace dmu;

namespace
{

struct Outcome
{
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0)
{
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

std::string scenario_path(const std::string& name) { return std::string(DMU_SCENARIO_DIR) + "/" + name; }

double seconds_since(std::chrono::steady_clock::time_point t0)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome scheduler_ratios()
{
  const auto t0 = std::chrono::steady_clock::now();
  Blackboard board;
  std::vector<int> count(3, 0);
  const std::uint32_t rates[] = {1, 3, 9};
  for (int i = 0; i < 3; ++i)
  {
    AgentDescriptor d;
    d.name = "r" + std::to_string(rates[i]);
    d.rate = rates[i];
    board.register_agent(d, [&count, i](const WorldState&) {
      ++count[static_cast<std::size_t>(i)];
      return Contribution{};
    });
  }
  WorldState w;
  w.target.position = {0, 1, 1};
  for (int t = 0; t < 9; ++t)
  {
    w = board.run_tick(w).world;
  }
  const double secs = seconds_since(t0);
  return {count == std::vector<int>{9, 3, 1} && secs < 1.0,
          "counts {" + std::to_string(count[0]) + "," + std::to_string(count[1]) + "," + std::to_string(count[2]) +
            "}" + fmt(", %.3f s", secs)};
}

Outcome trap_scenario()
{
  const auto t0 = std::chrono::steady_clock::now();
  const Scenario s = load_scenario(scenario_path("trap.json"));
  const auto r = run_headless(s);
  const double secs = seconds_since(t0);
  const auto& m = r.summary;
  const double ap = m.final_cone_aperture;
  const bool in_range =
    ap >= r.world.cone_limits.min_aperture - 1e-12 && ap <= r.world.cone_limits.max_aperture + 1e-12;
  const bool ok = !m.failed && m.final_distance <= 0.05 && m.final_collision_length == 0.0 &&
                  m.final_st_occlusion == 0.0 && m.ticks_run <= 5000 && in_range && secs < 10.0;
  return {ok, fmt("distance %.4f m, collision %g, st occlusion %g", m.final_distance, m.final_collision_length,
                  m.final_st_occlusion) +
                fmt(", aperture %.2f deg, %.0f ticks", rad2deg(ap), static_cast<double>(m.ticks_run)) +
                fmt(", %.2f s", secs)};
}

Outcome normalization_fuzz()
{
  oracle::Rng rng(1001);
  int violations = 0;
  for (int i = 0; i < 100000; ++i)
  {
    const double scale = std::pow(10.0, rng.uniform(-6, 6));
    Contribution c;
    c.d_trunk = Vec3(rng.vector(3, -1, 1)) * scale;
    c.d_head = Vec3(rng.vector(3, -1, 1)) * scale;
    c.d_cone = rng.uniform(-1, 1) * scale;
    const double dp = rng.uniform(1e-4, 0.5);
    const double dor = rng.uniform(1e-4, 0.5);
    const Contribution n = normalize_contribution(c, dp, dor);
    bool bad = n.d_trunk.head<2>().norm() > dp || std::abs(n.d_trunk.z()) > dor || std::abs(n.d_cone) > dor;
    for (int k = 0; k < 3; ++k)
    {
      bad = bad || std::abs(n.d_head[k]) > dor;
    }
    violations += bad ? 1 : 0;
  }
  return {violations == 0, std::to_string(violations) + " violations in 100000 draws"};
}

Outcome gradient_checks()
{
  oracle::Rng rng(1002);
  double worst_j = 0.0;
  const double h = 1e-5;
  for (int i = 0; i < 100; ++i)
  {
    RobotModel r;
    r.link_lengths = {rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0), rng.uniform(0.1, 0.5)};
    r.limits.assign(3, JointLimit{});
    r.base = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-3, 3)};
    r.q = rng.vector(3, -kPi, kPi);
    const MatrixXd j = robot_jacobian(r).topRows(2);
    MatrixXd fd(2, 3);
    for (Eigen::Index k = 0; k < 3; ++k)
    {
      RobotModel up = r;
      RobotModel dn = r;
      up.q[k] += h;
      dn.q[k] -= h;
      fd.col(k) = (robot_fk(up).position() - robot_fk(dn).position()) / (2 * h);
    }
    worst_j = std::max(worst_j, (j - fd).norm() / std::max(1.0, fd.norm()));
  }

  const oracle::Rect obstacle{0.0, 0.0, 1.0, 0.6};
  const Polygon2 obs = Polygon2::rectangle(obstacle.cx, obstacle.cy, obstacle.w, obstacle.h);
  double worst_r = 0.0;
  int checked = 0;
  while (checked < 100)
  {
    const oracle::Rect body{rng.uniform(-0.8, 0.8), rng.uniform(-0.6, 0.6), 0.4, 0.3};
    if (oracle::rect_overlap_perimeter(body, obstacle) == 0.0 || oracle::rect_edge_clearance(body, obstacle) < 1e-3)
    {
      continue;
    }
    const Polygon2 shape = Polygon2::rectangle(0, 0, body.w, body.h);
    const Vec3 g = finite_diff_gradient(
      [&](const PlanarPose& p) { return polygon_overlap_length(shape.transformed(p), obs); }, {body.cx, body.cy, 0.0});
    const Eigen::Vector2d expected = oracle::rect_overlap_gradient(body, obstacle);
    worst_r = std::max(worst_r, (g.head<2>() - expected).norm() / std::max(1.0, expected.norm()));
    ++checked;
  }
  return {worst_j <= 1e-6 && worst_r <= 1e-6,
          fmt("jacobian rel err %.2e, rectangle gradient rel err %.2e", worst_j, worst_r)};
}

Outcome joint_velocity_oracle()
{
  oracle::Rng rng(1003);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i)
  {
    const int n = rng.integer(2, 7);
    const int m = rng.integer(1, 3);
    const MatrixXd ba = rng.spd(n, 0.5);
    const TaskGains g{rng.spd(m, 0.1), rng.spd(m, 0.1)};
    const MatrixXd j = rng.matrix(m, n);
    const VectorXd x = rng.vector(m), xd = rng.vector(m), vd = rng.vector(m);
    const auto s = solve_joint_velocity(ba, g, j, x, xd, vd);
    const MatrixXd a = ba + j.transpose() * g.damping * j;
    const VectorXd ref = a.fullPivLu().solve(j.transpose() * (g.stiffness * (xd - x) + g.damping * vd));
    worst = std::max(worst, (s.qdot - ref).norm() / ref.norm());
  }
  bool raised = false;
  MatrixXd j(2, 3);
  j << 1, 0, 0, 2, 0, 0;
  try
  {
    (void)solve_joint_velocity(MatrixXd::Zero(3, 3), {MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2)}, j,
                               VectorXd::Zero(2), VectorXd::Ones(2), VectorXd::Zero(2));
  }
  catch (const SingularSystemError&)
  {
    raised = true;
  }
  return {worst <= 1e-10 && raised,
          fmt("max rel diff %.2e over 1000 instances, singular case ", worst) + (raised ? "raised" : "silent")};
}

Outcome external_port_nonnegative()
{
  oracle::Rng rng(1004);
  double worst = 1.0;
  for (int i = 0; i < 1000; ++i)
  {
    const int n = rng.integer(2, 7);
    const int m = rng.integer(1, n - 1);
    const JointDynamics d(rng.spd(n, 0.1), 1e-3);
    const MatrixXd j1 = rng.matrix(m, n);
    const VectorXd w1 = rng.vector(m, -5, 5);
    const MatrixXd p = null_space_projection(j1, d);
    const VectorXd gamma = internal_potential_torque(p, rng.vector(n, -5, 5), rng.uniform(0, 10));
    const double power = w1.dot(external_port_velocity(j1, d, w1, gamma));
    worst = std::min(worst, power);
  }
  return {worst >= -1e-12, fmt("min external power %.3e over 1000 draws", worst)};
}

Outcome passivity_counterexample()
{
  const auto t0 = std::chrono::steady_clock::now();
  const Scenario s = load_scenario(scenario_path("passivity.json"));
  const auto r = run_passivity(s.passivity);
  const double secs = seconds_since(t0);
  const auto& c = r.certificate;
  const bool ok = c.holds(1e-10) && r.steps <= 10000 && r.prioritized_energy < -100.0 &&
                  r.min_unprojected_power >= -1e-12 && secs < 5.0;
  return {ok, fmt("residuals %.1e/%.1e, power %.3f W", c.balance_residual, c.coupling_residual, c.power) +
                fmt(", energy %.1f J, min unprojected power %.1e", r.prioritized_energy, r.min_unprojected_power) +
                fmt(", %.2f s", secs)};
}

Outcome lcp_oracle()
{
  oracle::Rng rng(1005);
  double worst = 0.0;
  double worst_res = 0.0;
  int missing = 0;
  for (int i = 0; i < 500; ++i)
  {
    const int n = rng.integer(1, 6);
    const LcpProblem p{rng.spd(n, 0.05), rng.vector(n, -2, 2)};
    const auto ref = oracle::lcp_enumerate(p.m, p.b);
    if (!ref)
    {
      ++missing;
      continue;
    }
    const auto s = solve_lcp(p);
    worst = std::max(worst, (s.z - *ref).cwiseAbs().maxCoeff());
    worst_res = std::max(worst_res, lcp_residual(p, s.z));
  }
  return {worst <= 1e-8 && worst_res <= 1e-8 && missing == 0,
          fmt("max diff %.2e, max residual %.2e over 500 instances", worst, worst_res)};
}

Outcome hand_on_table()
{
  const Scenario s = load_scenario(scenario_path("hand_on_table.json"));
  const auto r = run_hand_on_table(s.table);

  TableConfig free = s.table;
  free.table_height = -10.0;
  for (auto& l : free.limits)
  {
    l = {-10.0, 10.0};
  }
  const auto lifted = run_hand_on_table(free);
  const auto plain = run_hand_unconstrained(free);
  double diff = 0.0;
  for (std::size_t k = 0; k < plain.size(); ++k)
  {
    diff = std::max(diff, (lifted.q.at(k) - plain[k]).cwiseAbs().maxCoeff());
  }
  const bool ok = r.max_penetration <= 1e-4 && r.contact_steps > 0 && lifted.contact_steps == 0 &&
                  lifted.q.size() == plain.size() && diff <= 1e-12;
  return {ok, fmt("max penetration %.2e m over %.0f contact steps, contact-free deviation %.1e",
                  r.max_penetration, static_cast<double>(r.contact_steps), diff)};
}

struct DrillRuns
{
  double worst_ratio = 0.0;
  double worst_excess = -1e300;
};

const DrillRuns& drill_runs()
{
  static const DrillRuns runs = [] {
    DrillRuns out;
    const Scenario s = load_scenario(scenario_path("drill.json"));
    for (std::uint64_t seed = 1; seed <= 10; ++seed)
    {
      DrillConfig cfg = s.drill;
      cfg.seed = seed;
      cfg.guided = false;
      const double free = run_drill(cfg).metrics.rms();
      cfg.guided = true;
      const auto g = run_drill(cfg);
      out.worst_ratio = std::max(out.worst_ratio, g.metrics.rms() / free);
      out.worst_excess = std::max(out.worst_excess, g.delivered_energy - g.initial_spring_energy);
    }
    return out;
  }();
  return runs;
}

Outcome drill_guidance()
{
  const double r = drill_runs().worst_ratio;
  return {r <= 0.25, fmt("worst guided/free RMS ratio %.3f over 10 seeds", r)};
}

Outcome guide_passivity()
{
  const double e = drill_runs().worst_excess;
  return {e <= 1e-6, fmt("max delivered minus initial spring energy %.3e J over 10 seeds", e)};
}

Outcome determinism()
{
  std::vector<std::string> files;
  for (const auto& entry : std::filesystem::directory_iterator(DMU_SCENARIO_DIR))
  {
    if (entry.path().extension() == ".json")
    {
      files.push_back(entry.path().string());
    }
  }
  std::sort(files.begin(), files.end());
  std::string mismatched;
  for (const auto& f : files)
  {
    const Scenario s = load_scenario(f);
    std::ostringstream a;
    std::ostringstream b;
    (void)run_headless(s, {.ticklog = &a});
    (void)run_headless(s, {.ticklog = &b});
    if (a.str() != b.str() || a.str().empty())
    {
      mismatched += " " + std::filesystem::path(f).filename().string();
    }
  }
  return {mismatched.empty() && !files.empty(),
          std::to_string(files.size()) + " scenarios" + (mismatched.empty() ? ", all identical" : ", differ:" + mismatched)};
}

}  // namespace

int main()
{
  const std::vector<std::pair<std::string, std::function<Outcome()>>> checks{
    {"scheduler ratios", scheduler_ratios},
    {"trap scenario", trap_scenario},
    {"normalization safety", normalization_fuzz},
    {"gradient checks", gradient_checks},
    {"joint velocity closed form", joint_velocity_oracle},
    {"external port nonnegativity", external_port_nonnegative},
    {"prioritization counterexample", passivity_counterexample},
    {"lcp oracle equivalence", lcp_oracle},
    {"hand on table", hand_on_table},
    {"drill guidance", drill_guidance},
    {"guide passivity", guide_passivity},
    {"determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, check] : checks)
  {
    Outcome o;
    try
    {
      o = check();
    }
    catch (const std::exception& e)
    {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria failed\n", failed, checks.size());
  return failed == 0 ? 0 : 1;
}
