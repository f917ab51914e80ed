#include "dmu/kinematics.hpp"

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dmu
{

bool ClampResult::any() const
{
  return std::any_of(violated.begin(), violated.end(), [](bool b) { return b; });
}

ClampResult clamp_to_limits(const Eigen::VectorXd& q, const std::vector<JointLimit>& limits)
{
  if (static_cast<std::size_t>(q.size()) != limits.size())
  {
    throw InvalidInput("joint vector and limit list differ in size");
  }
  ClampResult out{q, std::vector<bool>(limits.size(), false)};
  for (std::size_t i = 0; i < limits.size(); ++i)
  {
    const auto& l = limits[i];
    if (!(l.lo < l.hi))
    {
      throw InvalidInput("joint limit " + std::to_string(i) + " has lo >= hi");
    }
    const auto idx = static_cast<Eigen::Index>(i);
    if (q[idx] < l.lo)
    {
      out.q[idx] = l.lo;
      out.violated[i] = true;
    }
    else if (q[idx] > l.hi)
    {
      out.q[idx] = l.hi;
      out.violated[i] = true;
    }
  }
  return out;
}

void ManikinModel::validate() const
{
  const auto lims = limits.as_vector();
  const Eigen::Vector3d q = head.vec();
  for (std::size_t i = 0; i < 3; ++i)
  {
    if (!(lims[i].lo < lims[i].hi))
    {
      throw InvalidInput("head joint limit has lo >= hi");
    }
    const double v = q[static_cast<Eigen::Index>(i)];
    if (v < lims[i].lo || v > lims[i].hi)
    {
      throw InvalidInput("head joint outside its limits");
    }
  }
  if (!(trunk_height >= 0.0) || !eye_offset.allFinite())
  {
    throw InvalidInput("manikin trunk height / eye offset invalid");
  }
}

Vec3 vision_axis(double trunk_theta, const HeadAngles& head)
{
  const Eigen::Matrix3d r = (Eigen::AngleAxisd(trunk_theta + head.theta, Vec3::UnitZ()) *
                             Eigen::AngleAxisd(head.alpha, Vec3::UnitX()) *
                             Eigen::AngleAxisd(head.beta, Vec3::UnitY()))
                                .toRotationMatrix();
  return (r * Vec3::UnitY()).normalized();
}

EyeFrame manikin_eye_frame(const ManikinModel& m)
{
  const Eigen::Matrix3d rz = Eigen::AngleAxisd(m.trunk.theta, Vec3::UnitZ()).toRotationMatrix();
  const Vec3 eye = Vec3{m.trunk.x, m.trunk.y, m.trunk_height} + rz * m.eye_offset;
  return {eye, vision_axis(m.trunk.theta, m.head)};
}

void RobotModel::validate() const
{
  const std::size_t n = link_lengths.size();
  if (n == 0)
  {
    throw InvalidInput("robot needs at least one link");
  }
  if (static_cast<std::size_t>(q.size()) != n || limits.size() != n)
  {
    throw InvalidInput("robot joint vector / limits do not match link count");
  }
  for (double l : link_lengths)
  {
    if (!(l >= 0.0) || !std::isfinite(l))
    {
      throw InvalidInput("robot link lengths must be finite and non-negative");
    }
  }
  if (!(link_width > 0.0) || !std::isfinite(link_width))
  {
    throw InvalidInput("robot link width must be positive");
  }
  if (clamp_to_limits(q, limits).any())
  {
    throw InvalidInput("robot joints outside their limits");
  }
}

Aspect aspect_of(const Eigen::VectorXd& q, Aspect fallback)
{
  if (q.size() < 2)
  {
    return fallback;
  }
  const double s = std::sin(q[1]);
  if (s > 0.0)
  {
    return Aspect::kPositive;
  }
  if (s < 0.0)
  {
    return Aspect::kNegative;
  }
  return fallback;
}

std::vector<Vec2> robot_joint_positions(const RobotModel& r)
{
  std::vector<Vec2> pts;
  pts.reserve(r.dof() + 1);
  Vec2 p = r.base.position();
  double heading = r.base.theta;
  pts.push_back(p);
  for (std::size_t i = 0; i < r.dof(); ++i)
  {
    heading += r.q[static_cast<Eigen::Index>(i)];
    p += r.link_lengths[i] * Vec2{std::cos(heading), std::sin(heading)};
    pts.push_back(p);
  }
  return pts;
}

PlanarPose robot_fk(const RobotModel& r)
{
  const auto pts = robot_joint_positions(r);
  return {pts.back().x(), pts.back().y(), r.base.theta + r.q.sum()};
}

Eigen::MatrixXd robot_jacobian(const RobotModel& r)
{
  const auto pts = robot_joint_positions(r);
  const Vec2& tip = pts.back();
  Eigen::MatrixXd j(3, static_cast<Eigen::Index>(r.dof()));
  for (std::size_t i = 0; i < r.dof(); ++i)
  {
    const Vec2 lever = tip - pts[i];
    const auto c = static_cast<Eigen::Index>(i);
    j(0, c) = -lever.y();
    j(1, c) = lever.x();
    j(2, c) = 1.0;
  }
  return j;
}

namespace
{

Vec2 to_base(const PlanarPose& base, const Vec2& world)
{
  const Vec2 d = world - base.position();
  const double c = std::cos(base.theta);
  const double s = std::sin(base.theta);
  return {c * d.x() + s * d.y(), -s * d.x() + c * d.y()};
}

IkResult finish(const RobotModel& r, Eigen::VectorXd q)
{
  for (Eigen::Index i = 0; i < q.size(); ++i)
  {
    q[i] = wrap_angle(q[i]);
  }
  auto clamped = clamp_to_limits(q, r.limits);
  IkResult out;
  out.q = std::move(clamped.q);
  out.limited = clamped.any();
  out.limit_violated = std::move(clamped.violated);
  return out;
}

IkResult ik_two_link(const RobotModel& r, const Vec2& target)
{
  const double l1 = r.link_lengths[0];
  const double l2 = r.link_lengths[1];
  const Vec2 local = to_base(r.base, target);
  const double d = local.norm();
  const double r_max = l1 + l2;
  const double r_min = std::abs(l1 - l2);
  const double tol = 1e-12 * (1.0 + r_max);

  if (d > r_max + tol || d < r_min - tol)
  {
    const Vec2 dir = d > 0.0 ? Vec2{local / d} : Vec2{1.0, 0.0};
    const Vec2 closest_local = dir * std::clamp(d, r_min, r_max);
    throw OutOfReach("target outside the reachable annulus", r.base.apply(closest_local));
  }

  const double c2 = std::clamp((d * d - l1 * l1 - l2 * l2) / (2.0 * l1 * l2), -1.0, 1.0);
  const double s2 = static_cast<double>(static_cast<int>(r.aspect)) * std::sqrt(std::max(0.0, 1.0 - c2 * c2));
  Eigen::VectorXd q(2);
  q[1] = std::atan2(s2, c2);
  q[0] = std::atan2(local.y(), local.x()) - std::atan2(l2 * s2, l1 + l2 * c2);
  return finish(r, q);
}

IkResult ik_damped_least_squares(const RobotModel& r, const Vec2& target)
{
  const double reach = std::accumulate(r.link_lengths.begin(), r.link_lengths.end(), 0.0);
  if ((target - r.base.position()).norm() > reach * (1.0 + 1e-12))
  {
    const Vec2 d = target - r.base.position();
    throw OutOfReach("target beyond the chain's reach", r.base.position() + d.normalized() * reach);
  }
  RobotModel work = r;
  constexpr double kDamping = 1e-2;
  for (int it = 0; it < 500; ++it)
  {
    const Vec2 tip = robot_fk(work).position();
    const Vec2 err = target - tip;
    if (err.norm() < 1e-12 * (1.0 + reach))
    {
      return finish(r, work.q);
    }
    const Eigen::MatrixXd jp = robot_jacobian(work).topRows(2);
    const Eigen::Matrix2d jjt = jp * jp.transpose() + kDamping * kDamping * Eigen::Matrix2d::Identity();
    work.q += jp.transpose() * jjt.ldlt().solve(err);
  }
  throw OutOfReach("damped least squares did not converge", robot_fk(work).position());
}

}  // namespace

IkResult ik_planar_preserving_aspect(const RobotModel& r, const Vec2& target)
{
  if (r.dof() == 2 && r.link_lengths[0] > 0.0 && r.link_lengths[1] > 0.0)
  {
    return ik_two_link(r, target);
  }
  return ik_damped_least_squares(r, target);
}

std::vector<Polygon2> robot_link_shapes(const RobotModel& r)
{
  const auto pts = robot_joint_positions(r);
  std::vector<Polygon2> shapes;
  const double hw = 0.5 * r.link_width;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i)
  {
    const Vec2 d = pts[i + 1] - pts[i];
    const double len = d.norm();
    if (len <= 0.0)
    {
      continue;
    }
    const Vec2 n = Vec2{-d.y(), d.x()} / len * hw;
    shapes.emplace_back(std::vector<Vec2>{pts[i] - n, pts[i + 1] - n, pts[i + 1] + n, pts[i] + n});
  }
  return shapes;
}

}  // namespace dmu
