#include "dmu/agents.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>

namespace dmu
{

namespace
{

// Heading of the body's forward axis: +y for the manikin trunk, +x (the
// first link at q = 0) for the robot base.
double forward_heading(const WorldState& w)
{
  const PlanarPose p = w.leading_pose();
  return w.subject == Subject::kRobot ? p.theta : p.theta + 0.5 * kPi;
}

}  // namespace

Contribution attraction_step(const WorldState& w, const AttractionParams& p)
{
  Contribution c;
  const PlanarPose pose = w.leading_pose();
  const Vec2 to_target = w.target.position.head<2>() - pose.position();
  const double dist = to_target.norm();

  if (dist > p.stop_radius)
  {
    c.d_trunk.x() = to_target.x();
    c.d_trunk.y() = to_target.y();
    c.d_trunk.z() = wrap_angle(std::atan2(to_target.y(), to_target.x()) - forward_heading(w));
  }

  if (w.subject == Subject::kRobot && w.robot)
  {
    const RobotModel& r = *w.robot;
    IkResult ik;
    try
    {
      ik = ik_planar_preserving_aspect(r, w.target.position.head<2>());
    }
    catch (const OutOfReach& e)
    {
      ik = ik_planar_preserving_aspect(r, e.closest_reachable());
    }
    c.d_joints = Eigen::VectorXd(r.q.size());
    for (Eigen::Index i = 0; i < r.q.size(); ++i)
    {
      c.d_joints[i] = wrap_angle(ik.q[i] - r.q[i]);
    }
  }
  return c;
}

Contribution repulsion_step(const WorldState& w, const RepulsionParams& p)
{
  Contribution c;
  const PlanarPose pose = w.leading_pose();
  if (collision_length_at(w, pose) == 0.0)
  {
    return c;
  }
  const Vec3 grad = finite_diff_gradient([&](const PlanarPose& at) { return collision_length_at(w, at); }, pose,
                                         p.steps);
  c.d_trunk = -grad;

  if (w.subject == Subject::kRobot && w.robot)
  {
    const Eigen::Index n = w.robot->q.size();
    c.d_joints = Eigen::VectorXd::Zero(n);
    WorldState probe = w;
    for (Eigen::Index i = 0; i < n; ++i)
    {
      const double h = p.steps.dtheta;
      probe.robot->q[i] = w.robot->q[i] + h;
      const double up = collision_length(probe);
      probe.robot->q[i] = w.robot->q[i] - h;
      const double down = collision_length(probe);
      probe.robot->q[i] = w.robot->q[i];
      if (!std::isfinite(up) || !std::isfinite(down))
      {
        throw EvaluationFailure("joint collision criterion is not finite");
      }
      c.d_joints[i] = -(up - down) / (2.0 * h);
    }
  }
  return c;
}

double gaze_error(const WorldState& w)
{
  const EyeFrame eye = manikin_eye_frame(w.manikin);
  const Vec3 u = w.target.position - eye.eye;
  if (u.norm() == 0.0)
  {
    return 0.0;
  }
  return std::acos(std::clamp(eye.vision_axis.dot(u.normalized()), -1.0, 1.0));
}

Contribution head_orientation_step(const WorldState& w, const HeadOrientationParams& p)
{
  Contribution c;
  const ManikinModel& m = w.manikin;
  const Vec3 u = w.target.position - manikin_eye_frame(m).eye;
  if (u.norm() == 0.0)
  {
    return c;
  }

  const HeadLimits& lim = m.limits;
  auto bounded = [](double q, double dq, const JointLimit& l) { return std::clamp(q + dq, l.lo, l.hi) - q; };

  if (gaze_error(w) <= p.on_axis_tolerance)
  {
    // On target: trade head yaw for trunk yaw; the gaze direction is unchanged.
    const double dyaw = -p.neutral_gain * m.head.theta;
    c.d_head.z() = bounded(m.head.theta, dyaw, lim.theta);
    c.d_trunk.z() = -c.d_head.z();
    return c;
  }

  // Target direction in the trunk frame (forward = +y).
  const double ct = std::cos(m.trunk.theta);
  const double st = std::sin(m.trunk.theta);
  const Vec3 local{ct * u.x() + st * u.y(), -st * u.x() + ct * u.y(), u.z()};
  const double yaw_goal = std::atan2(-local.x(), local.y());
  const double pitch_goal = std::atan2(local.z(), std::hypot(local.x(), local.y()));

  const double dyaw = p.gain * wrap_angle(yaw_goal - m.head.theta);
  const double dpitch = p.gain * (pitch_goal - m.head.alpha);
  c.d_head.x() = bounded(m.head.alpha, dpitch, lim.alpha);
  c.d_head.y() = 0.0;
  c.d_head.z() = bounded(m.head.theta, dyaw, lim.theta);
  return c;
}

Contribution visibility_step(const WorldState& w, const VisibilityParams& p)
{
  Contribution c;
  const PlanarPose trunk = w.manikin.trunk;
  auto occlusion = [&](const PlanarPose& at) {
    return st_occlusion_at(w, at) + cone_occlusion_at(w, at, p.n_rays);
  };
  if (occlusion(trunk) > 0.0)
  {
    c.d_trunk = -finite_diff_gradient(occlusion, trunk, p.steps);
  }

  const double aperture = w.cone.aperture;
  const double step = gaze_error(w) <= aperture ? p.aperture_step : -p.aperture_step;
  c.d_cone = std::clamp(aperture + step, w.cone_limits.min_aperture, w.effective_max_aperture()) - aperture;
  return c;
}

void OperatorQueue::push(const OperatorInput& in)
{
  if (!in.d_pos.allFinite() || !std::isfinite(in.d_theta) || !std::isfinite(in.timestamp))
  {
    throw InvalidInput("operator input must be finite");
  }
  const std::lock_guard lock{mutex_};
  queue_.push_back(in);
}

OperatorQueue::Drained OperatorQueue::drain()
{
  const std::lock_guard lock{mutex_};
  Drained out;
  if (!queue_.empty())
  {
    out.latest = queue_.back();
    out.dropped = static_cast<std::uint32_t>(queue_.size() - 1);
    queue_.clear();
  }
  return out;
}

std::size_t OperatorQueue::pending() const
{
  const std::lock_guard lock{mutex_};
  return queue_.size();
}

Contribution operator_step(const WorldState& /*w*/, OperatorQueue& queue, AgentContext& ctx)
{
  Contribution c;
  const auto drained = queue.drain();
  ctx.dropped_inputs = drained.dropped;
  if (drained.latest)
  {
    c.d_trunk = Vec3{drained.latest->d_pos.x(), drained.latest->d_pos.y(), drained.latest->d_theta};
  }
  return c;
}

std::optional<AgentKind> agent_kind_from_string(const std::string& s)
{
  if (s == "attraction") return AgentKind::kAttraction;
  if (s == "repulsion") return AgentKind::kRepulsion;
  if (s == "head_orientation") return AgentKind::kHeadOrientation;
  if (s == "visibility") return AgentKind::kVisibility;
  if (s == "operator") return AgentKind::kOperator;
  return std::nullopt;
}

std::string to_string(AgentKind k)
{
  switch (k)
  {
    case AgentKind::kAttraction: return "attraction";
    case AgentKind::kRepulsion: return "repulsion";
    case AgentKind::kHeadOrientation: return "head_orientation";
    case AgentKind::kVisibility: return "visibility";
    case AgentKind::kOperator: return "operator";
  }
  return "unknown";
}

AgentStepFn make_agent(AgentKind kind, const AgentParams& params, std::shared_ptr<OperatorQueue> queue)
{
  switch (kind)
  {
    case AgentKind::kAttraction:
      return [p = params.attraction](const WorldState& w, AgentContext&) { return attraction_step(w, p); };
    case AgentKind::kRepulsion:
      return [p = params.repulsion](const WorldState& w, AgentContext&) { return repulsion_step(w, p); };
    case AgentKind::kHeadOrientation:
      return [p = params.head](const WorldState& w, AgentContext&) { return head_orientation_step(w, p); };
    case AgentKind::kVisibility:
      return [p = params.visibility](const WorldState& w, AgentContext&) { return visibility_step(w, p); };
    case AgentKind::kOperator:
      if (!queue)
      {
        throw InvalidInput("operator agent needs an input queue");
      }
      return [q = std::move(queue)](const WorldState& w, AgentContext& ctx) { return operator_step(w, *q, ctx); };
  }
  throw InvalidInput("unknown agent kind");
}

}  // namespace dmu
