#include "dmu/avatar.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace dmu
{

namespace
{

Quaterniond exp_rotation(const Vec3& phi)
{
  const double angle = phi.norm();
  if (angle == 0.0)
  {
    return Quaterniond::Identity();
  }
  return Quaterniond{Eigen::AngleAxisd(angle, phi / angle)};
}

struct Sinusoid
{
  double amplitude;
  double omega;
  double phase;
};

std::vector<Sinusoid> draw_channel(std::mt19937_64& rng, const DrillConfig& cfg, double rms)
{
  std::uniform_real_distribution<double> freq(cfg.noise_min_hz, cfg.noise_max_hz);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  // Each term contributes amplitude²/2 to the variance.
  const double amp = rms * std::sqrt(2.0 / cfg.noise_terms);
  std::vector<Sinusoid> out;
  for (int i = 0; i < cfg.noise_terms; ++i)
  {
    const double f = freq(rng);
    out.push_back({amp, 2.0 * kPi * f, phase(rng)});
  }
  return out;
}

double eval(const std::vector<Sinusoid>& ch, double t)
{
  double v = 0.0;
  for (const auto& s : ch)
  {
    v += s.amplitude * std::sin(s.omega * t + s.phase);
  }
  return v;
}

std::pair<Vec3, Vec3> perpendicular_basis(const Vec3& axis)
{
  const Vec3 seed = std::abs(axis.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 e1 = axis.cross(seed).normalized();
  return {e1, axis.cross(e1)};
}

}  // namespace

ReplayTrack make_drill_track(const DrillConfig& cfg)
{
  if (!(cfg.dt > 0.0) || cfg.steps == 0 || !(cfg.sample_rate > 0.0) || cfg.noise_terms <= 0)
  {
    throw InvalidInput("drill: dt, steps, sample_rate and noise_terms must be positive");
  }
  if (std::abs(cfg.axis.norm() - 1.0) > 1e-9)
  {
    throw InvalidInput("drill: axis must be a unit vector");
  }
  std::mt19937_64 rng(cfg.seed);
  const auto tilt1 = draw_channel(rng, cfg, cfg.noise_angle);
  const auto tilt2 = draw_channel(rng, cfg, cfg.noise_angle);
  const auto lat1 = draw_channel(rng, cfg, cfg.noise_position);
  const auto lat2 = draw_channel(rng, cfg, cfg.noise_position);

  const auto [e1, e2] = perpendicular_basis(cfg.axis);
  const Quaterniond ideal = Quaterniond::FromTwoVectors(Vec3::UnitZ(), cfg.axis);
  const double duration = static_cast<double>(cfg.steps) * cfg.dt;
  const auto n = static_cast<std::size_t>(std::ceil(duration * cfg.sample_rate)) + 1;

  std::vector<double> times;
  std::vector<std::vector<Frame>> frames;
  for (std::size_t k = 0; k < n; ++k)
  {
    const double t = static_cast<double>(k) / cfg.sample_rate;
    const double u = std::min(1.0, t / duration);
    Frame f;
    f.position = cfg.hole + cfg.axis * (-cfg.standoff + (cfg.standoff + cfg.depth) * u) + e1 * eval(lat1, t) +
                 e2 * eval(lat2, t);
    f.orientation = (exp_rotation(e1 * eval(tilt1, t) + e2 * eval(tilt2, t)) * ideal).normalized();
    times.push_back(t);
    frames.push_back({f});
  }
  return ReplayTrack{std::move(times), std::move(frames), {"tool"}};
}

DrillResult run_drill(const DrillConfig& cfg, const std::optional<ReplayTrack>& track, const PhysicsSink& sink)
{
  const ReplayTrack tr = track ? *track : make_drill_track(cfg);
  if (!(cfg.tool_damping > 0.0) || !(cfg.tool_rot_damping > 0.0) || !(cfg.dt > 0.0))
  {
    throw InvalidInput("drill: tool damping and dt must be positive");
  }

  ToolPose tool = replay_point(tr, 0.0);
  std::optional<Guide> guide;
  if (cfg.guided)
  {
    VirtualMechanism m = cfg.guide;
    m.kind = MechanismKind::kSlide;
    m.origin = cfg.hole;
    m.axis = cfg.axis;
    m.target_axis = cfg.axis;
    guide.emplace(m, tool);
  }

  DrillResult out;
  out.initial_spring_energy = guide ? guide->spring_energy() : 0.0;
  Wrench lagged;
  for (std::uint64_t k = 0; k < cfg.steps; ++k)
  {
    const double t = static_cast<double>(k) * cfg.dt;
    const Frame target = replay_point(tr, t);
    const Vec3 force = cfg.hand_stiffness * (target.position - tool.position) + lagged.force;
    const Vec3 torque =
      cfg.hand_rot_stiffness * rotation_increment(tool.orientation, target.orientation) + lagged.torque;

    ToolPose next;
    next.position = tool.position + cfg.dt / cfg.tool_damping * force;
    next.orientation = (exp_rotation(cfg.dt / cfg.tool_rot_damping * torque) * tool.orientation).normalized();

    PhysicsSample s;
    if (guide)
    {
      const Vec6 tw = twist_between(tool, next, cfg.dt);
      const GuideStep gs = guide->step(next, tw, cfg.dt);
      out.delivered_energy += gs.wrench.stacked().dot(tw) * cfg.dt;
      out.dissipated += gs.dissipated;
      lagged = gs.wrench;
      s.guide_energy = gs.spring_energy;
    }
    tool = next;
    const double angle = guide_angle_error(tool.axis(), cfg.axis);
    out.metrics.record(angle);
    if (!std::isfinite(angle) || !tool.position.allFinite())
    {
      throw EvaluationFailure("drill: tool state became non-finite");
    }

    if (sink)
    {
      s.time = static_cast<double>(k + 1) * cfg.dt;
      s.guide_angle = angle;
      s.energy_external = out.delivered_energy;
      sink(k + 1, s, VectorXd{});
    }
  }
  out.final_tool = tool;
  return out;
}

namespace
{

std::shared_ptr<PlanarChainProbes> table_arm(const TableConfig& cfg)
{
  return std::make_shared<PlanarChainProbes>(cfg.shoulder, cfg.links);
}

JointDynamics table_dynamics(const TableConfig& cfg)
{
  if (cfg.damping.size() != cfg.links.size() || cfg.q0.size() != static_cast<Eigen::Index>(cfg.links.size()))
  {
    throw InvalidInput("hand_on_table: damping, q0 and links must have the same length");
  }
  const VectorXd b = Eigen::Map<const VectorXd>(cfg.damping.data(), static_cast<Eigen::Index>(cfg.damping.size()));
  return JointDynamics{b.asDiagonal(), cfg.dt};
}

TorqueField table_pull(const PlanarChainProbes& arm, const Vec2& x_d, double k)
{
  return [&arm, x_d, k](const VectorXd& q) -> VectorXd {
    return arm.probe_jacobian(q, 0).transpose() * (k * (x_d - arm.probe_position(q, 0)));
  };
}

Vec2 hand_target(const ReplayTrack& tr, double t)
{
  const Vec3 p = replay_point(tr, t).position;
  return {p.x(), p.z()};
}

}  // namespace

ReplayTrack make_table_track(const TableConfig& cfg)
{
  const auto arm = table_arm(cfg);
  const Vec2 start = arm->probe_position(cfg.q0, 0);
  const double h = cfg.table_height;
  const double duration = static_cast<double>(cfg.steps) * cfg.dt;
  auto frame = [](double x, double z) { return std::vector<Frame>{Frame{Vec3{x, 0.0, z}, Quaterniond::Identity()}}; };
  std::vector<double> times{0.0, 0.25 * duration, 0.45 * duration, 0.65 * duration, 0.85 * duration,
                            duration};
  std::vector<std::vector<Frame>> frames{frame(start.x(), start.y()), frame(0.55, h - 0.05),
                                         frame(0.55, h - 0.05),       frame(0.7, h - 0.05),
                                         frame(0.6, h + 0.12),        frame(0.6, h + 0.12)};
  return ReplayTrack{std::move(times), std::move(frames), {"hand"}};
}

TableResult run_hand_on_table(const TableConfig& cfg, const PhysicsSink& sink)
{
  const auto arm = table_arm(cfg);
  const JointDynamics d = table_dynamics(cfg);
  const ReplayTrack tr = make_table_track(cfg);

  ContactWorld world;
  world.kinematics = arm;
  world.boxes.push_back(Box2{Vec2{cfg.table_x.x(), cfg.table_height - 1.0}, Vec2{cfg.table_x.y(), cfg.table_height}});
  world.joint_limits = cfg.limits;

  TableResult out;
  VectorXd q = cfg.q0;
  for (std::uint64_t k = 0; k < cfg.steps; ++k)
  {
    const double t = static_cast<double>(k) * cfg.dt;
    const ConstrainedStep cs = step_constrained(d, q, table_pull(*arm, hand_target(tr, t), cfg.stiffness), world,
                                                cfg.contact, cfg.lcp);
    q = cs.q;
    out.q.push_back(q);
    const double gap = min_probe_gap(world, q);
    out.max_penetration = std::max(out.max_penetration, -gap);
    out.max_lcp_residual = std::max(out.max_lcp_residual, cs.lcp.residual);
    if (!cs.contacts.empty())
    {
      ++out.contact_steps;
    }
    if (sink)
    {
      PhysicsSample s;
      s.time = static_cast<double>(k + 1) * cfg.dt;
      s.contact_count = static_cast<std::uint32_t>(cs.contacts.size());
      s.max_penetration = std::max(0.0, out.max_penetration);
      s.impulse_norm = cs.lcp.z.size() ? cs.lcp.z.norm() : 0.0;
      s.probe_height = arm->probe_position(q, 0).y();
      s.obstacle_height = cfg.table_height;
      sink(k + 1, s, q);
    }
  }
  out.max_penetration = std::max(0.0, out.max_penetration);
  return out;
}

std::vector<VectorXd> run_hand_unconstrained(const TableConfig& cfg)
{
  const auto arm = table_arm(cfg);
  const JointDynamics d = table_dynamics(cfg);
  const ReplayTrack tr = make_table_track(cfg);
  std::vector<VectorXd> out;
  VectorXd q = cfg.q0;
  for (std::uint64_t k = 0; k < cfg.steps; ++k)
  {
    const double t = static_cast<double>(k) * cfg.dt;
    q = step_first_order(d, q, table_pull(*arm, hand_target(tr, t), cfg.stiffness));
    out.push_back(q);
  }
  return out;
}

PassivityResult run_passivity(const PassivityConfig& cfg, const PhysicsSink& sink)
{
  const VectorXd b = Eigen::Map<const VectorXd>(cfg.damping.data(), static_cast<Eigen::Index>(cfg.damping.size()));
  const JointDynamics d{b.asDiagonal(), cfg.dt};
  const PassivityCounterexample ce =
    build_passivity_counterexample(cfg.j1, d, VectorXd::Constant(cfg.j1.rows(), cfg.w2));

  PassivityResult out;
  out.certificate = ce.certificate;
  out.min_unprojected_power = std::numeric_limits<double>::infinity();

  EnergyLedger ledger(2);
  const VectorXd gamma = prioritized_torque(ce, cfg.j1);
  const VectorXd gamma_ext = cfg.j1.transpose() * ce.w1;
  VectorXd q = VectorXd::Zero(d.dof());
  for (std::uint64_t k = 0; k < cfg.steps; ++k)
  {
    const VectorXd qdot = d.velocity(gamma);
    ledger.record(0, ce.w1, cfg.j1 * qdot, cfg.dt);
    ledger.record(1, ce.w2, ce.j2 * qdot, cfg.dt);
    q = step_first_order(d, q, gamma);

    const double p_ext = ce.w1.dot(cfg.j1 * d.velocity(gamma_ext));
    out.min_unprojected_power = std::min(out.min_unprojected_power, p_ext);
    if (sink)
    {
      PhysicsSample s;
      s.time = static_cast<double>(k + 1) * cfg.dt;
      s.energy_external = ledger.energy(0);
      s.energy_internal = ledger.energy(1);
      sink(k + 1, s, q);
    }
  }
  out.prioritized_energy = ledger.total();
  out.steps = cfg.steps;
  return out;
}

}  // namespace dmu
