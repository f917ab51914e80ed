#include "dmu/blackboard.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

namespace dmu
{

void AgentDescriptor::validate() const
{
  if (name.empty())
  {
    throw InvalidInput("agent name must not be empty");
  }
  if (rate == 0)
  {
    throw InvalidInput("agent '" + name + "': rate must be >= 1");
  }
  if (!(delta_pos > 0.0) || !std::isfinite(delta_pos))
  {
    throw InvalidInput("agent '" + name + "': delta_pos must be positive");
  }
  if (!(delta_or > 0.0) || !std::isfinite(delta_or))
  {
    throw InvalidInput("agent '" + name + "': delta_or must be positive");
  }
}

bool Contribution::is_zero() const
{
  return d_trunk.isZero(0.0) && d_head.isZero(0.0) && (d_joints.size() == 0 || d_joints.isZero(0.0)) &&
         d_cone == 0.0;
}

bool Contribution::all_finite() const
{
  return d_trunk.allFinite() && d_head.allFinite() && d_joints.allFinite() && std::isfinite(d_cone);
}

Contribution& Contribution::operator+=(const Contribution& o)
{
  if (o.d_joints.size() > 0 && d_joints.size() > 0 && d_joints.size() != o.d_joints.size())
  {
    throw InvalidInput("joint contributions differ in size");
  }
  d_trunk += o.d_trunk;
  d_head += o.d_head;
  if (o.d_joints.size() > 0)
  {
    if (d_joints.size() == 0)
    {
      d_joints = Eigen::VectorXd::Zero(o.d_joints.size());
    }
    d_joints += o.d_joints;
  }
  d_cone += o.d_cone;
  return *this;
}

Contribution normalize_contribution(const Contribution& raw, double delta_pos, double delta_or)
{
  if (!(delta_pos > 0.0) || !(delta_or > 0.0))
  {
    throw InvalidInput("normalization bounds must be positive");
  }
  if (!raw.all_finite())
  {
    throw EvaluationFailure("contribution has non-finite components");
  }
  Contribution out = raw;
  const double norm = std::hypot(raw.d_trunk.x(), raw.d_trunk.y());
  if (norm > delta_pos)
  {
    // Scaling by the ratio can overshoot delta_pos by an ulp under either
    // norm formula; nudge back until both agree.
    double scale = delta_pos / norm;
    out.d_trunk.x() = raw.d_trunk.x() * scale;
    out.d_trunk.y() = raw.d_trunk.y() * scale;
    while (std::hypot(out.d_trunk.x(), out.d_trunk.y()) > delta_pos || out.d_trunk.head<2>().norm() > delta_pos)
    {
      scale = std::nextafter(scale, 0.0);
      out.d_trunk.x() = raw.d_trunk.x() * scale;
      out.d_trunk.y() = raw.d_trunk.y() * scale;
    }
  }
  auto clamp_or = [delta_or](double v) { return std::clamp(v, -delta_or, delta_or); };
  out.d_trunk.z() = clamp_or(raw.d_trunk.z());
  out.d_head = raw.d_head.unaryExpr(clamp_or);
  out.d_joints = raw.d_joints.unaryExpr(clamp_or);
  out.d_cone = clamp_or(raw.d_cone);
  return out;
}

void apply_contribution(WorldState& w, const Contribution& sum)
{
  w.set_leading_pose(w.leading_pose().moved(sum.d_trunk.x(), sum.d_trunk.y(), sum.d_trunk.z()));

  const Eigen::Vector3d head = w.manikin.head.vec() + sum.d_head;
  w.manikin.head = HeadAngles::from(clamp_to_limits(head, w.manikin.limits.as_vector()).q);

  if (w.robot && sum.d_joints.size() > 0)
  {
    if (sum.d_joints.size() != w.robot->q.size())
    {
      throw InvalidInput("joint contribution size does not match the robot");
    }
    Eigen::VectorXd q = w.robot->q + sum.d_joints;
    for (Eigen::Index i = 0; i < q.size(); ++i)
    {
      q[i] = wrap_angle(q[i]);
    }
    w.robot->q = clamp_to_limits(q, w.robot->limits).q;
    w.robot->aspect = aspect_of(w.robot->q, w.robot->aspect);
  }

  w.cone.aperture += sum.d_cone;
  w.refresh_cone();
}

Criteria evaluate_criteria(const WorldState& w)
{
  return {distance_to_target(w), collision_length(w), st_occlusion(w), cone_occlusion(w), w.cone.aperture};
}

AgentHandle Blackboard::register_agent(AgentDescriptor desc, AgentStepFn step)
{
  desc.validate();
  if (find(desc.name))
  {
    throw InvalidInput("duplicate agent name '" + desc.name + "'");
  }
  if (!step)
  {
    throw InvalidInput("agent '" + desc.name + "' has no step function");
  }
  agents_.push_back({std::move(desc), std::move(step)});
  return AgentHandle{agents_.size() - 1};
}

AgentHandle Blackboard::register_agent(AgentDescriptor desc, std::function<Contribution(const WorldState&)> step)
{
  if (!step)
  {
    throw InvalidInput("agent '" + desc.name + "' has no step function");
  }
  return register_agent(std::move(desc),
                        [fn = std::move(step)](const WorldState& w, AgentContext&) { return fn(w); });
}

Blackboard::Slot& Blackboard::slot(AgentHandle h)
{
  if (h.index >= agents_.size())
  {
    throw InvalidInput("unknown agent handle");
  }
  return agents_[h.index];
}

const Blackboard::Slot& Blackboard::slot(AgentHandle h) const
{
  if (h.index >= agents_.size())
  {
    throw InvalidInput("unknown agent handle");
  }
  return agents_[h.index];
}

void Blackboard::set_agent_control(AgentHandle h, const AgentControl& ctl)
{
  Slot& s = slot(h);
  AgentDescriptor next = s.desc;
  if (ctl.enabled)
  {
    next.enabled = *ctl.enabled;
  }
  if (ctl.rate)
  {
    next.rate = *ctl.rate;
  }
  if (ctl.delta_pos)
  {
    next.delta_pos = *ctl.delta_pos;
  }
  if (ctl.delta_or)
  {
    next.delta_or = *ctl.delta_or;
  }
  next.validate();
  s.desc = std::move(next);
}

std::optional<AgentHandle> Blackboard::find(std::string_view name) const
{
  for (std::size_t i = 0; i < agents_.size(); ++i)
  {
    if (agents_[i].desc.name == name)
    {
      return AgentHandle{i};
    }
  }
  return std::nullopt;
}

const AgentDescriptor& Blackboard::descriptor(AgentHandle h) const { return slot(h).desc; }

std::vector<AgentDescriptor> Blackboard::roster() const
{
  std::vector<AgentDescriptor> out;
  out.reserve(agents_.size());
  for (const auto& s : agents_)
  {
    out.push_back(s.desc);
  }
  return out;
}

TickResult Blackboard::run_tick(const WorldState& world)
{
  const std::uint64_t tick = world.tick + 1;
  TickLog log;
  log.tick = tick;
  log.agents.reserve(agents_.size());

  Contribution sum;
  for (auto& s : agents_)
  {
    AgentTickEntry entry;
    entry.name = s.desc.name;
    if (s.desc.enabled && tick % s.desc.rate == 0)
    {
      entry.active = true;
      try
      {
        AgentContext ctx;
        entry.raw = s.step(world, ctx);
        entry.dropped_inputs = ctx.dropped_inputs;
        entry.normalized = normalize_contribution(entry.raw, s.desc.delta_pos, s.desc.delta_or);
        sum += entry.normalized;
      }
      catch (const std::exception& e)
      {
        entry.failed = true;
        entry.error = e.what();
        entry.normalized = Contribution{};
      }
    }
    log.agents.push_back(std::move(entry));
  }

  TickResult out{world, std::move(log)};
  apply_contribution(out.world, sum);
  out.world.tick = tick;
  out.log.applied = sum;
  out.log.criteria = evaluate_criteria(out.world);
  out.log.leading = out.world.leading_pose();
  out.log.head = out.world.manikin.head;
  if (out.world.robot)
  {
    out.log.robot_q = out.world.robot->q;
  }
  return out;
}

}  // namespace dmu
