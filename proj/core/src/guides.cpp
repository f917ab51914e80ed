#include "dmu/guides.hpp"

#include <algorithm>
#include <cmath>

namespace dmu
{

namespace
{

bool unit(const Vec3& v) { return std::abs(v.norm() - 1.0) <= 1e-9; }

// Below this rotation the discrete-gradient correction is numerically
// meaningless and the midpoint gradient is already exact to O(|φ|³).
constexpr double kTinyAngle = 1e-9;

Vec3 rotate_half(const Vec3& a, const Vec3& phi)
{
  const double angle = phi.norm();
  if (angle < kTinyAngle)
  {
    return a;
  }
  return Eigen::AngleAxisd(0.5 * angle, phi / angle) * a;
}

}  // namespace

Vec6 Wrench::stacked() const
{
  Vec6 w;
  w << force, torque;
  return w;
}

void VirtualMechanism::validate() const
{
  if (!unit(axis) || !unit(target_axis))
  {
    throw InvalidInput("guide axes must be unit vectors");
  }
  if (!origin.allFinite())
  {
    throw InvalidInput("guide origin must be finite");
  }
  for (double g : {stiffness, rot_stiffness, damping, rot_damping, mechanism_damping})
  {
    if (!(g > 0.0) || !std::isfinite(g))
    {
      throw InvalidInput("guide gains must be positive");
    }
  }
}

Guide::Guide(VirtualMechanism mech, const ToolPose& tool) : mech_{std::move(mech)}, tool_{tool}
{
  mech_.validate();
  if (mech_.kind == MechanismKind::kSlide)
  {
    s_ = mech_.axis.dot(tool.position - mech_.origin);
  }
}

Guide attach_guide(const VirtualMechanism& mech, const ToolPose& tool) { return Guide{mech, tool}; }

Vec3 Guide::anchor() const
{
  return mech_.kind == MechanismKind::kSlide ? Vec3(mech_.origin + s_ * mech_.axis) : tool_.position;
}

Vec3 Guide::ideal_axis() const
{
  if (mech_.kind == MechanismKind::kSlide)
  {
    return mech_.target_axis;
  }
  const Vec3 d = mech_.origin - tool_.position;
  const double r = d.norm();
  return r > 0.0 ? Vec3(d / r) : tool_.axis();
}

double Guide::potential(const ToolPose& tool, double s) const
{
  const Vec3 a = tool.axis();
  if (mech_.kind == MechanismKind::kSlide)
  {
    const Vec3 e = tool.position - mech_.origin - s * mech_.axis;
    return 0.5 * mech_.stiffness * e.squaredNorm() + mech_.rot_stiffness * (1.0 - a.dot(mech_.target_axis));
  }
  const Vec3 d = mech_.origin - tool.position;
  const double r = d.norm();
  if (r < kTinyAngle)
  {
    return 0.0;
  }
  return mech_.rot_stiffness * (1.0 - a.dot(d / r));
}

double Guide::spring_energy() const { return potential(tool_, s_); }

GuideStep Guide::step(const ToolPose& tool, const Vec6& twist, double dt)
{
  if (!(dt > 0.0))
  {
    throw InvalidInput("guide step needs dt > 0");
  }
  if (!tool.position.allFinite() || !tool.orientation.coeffs().allFinite() || !twist.allFinite())
  {
    throw InvalidInput("tool pose and twist must be finite");
  }

  const Vec3 dp = tool.position - tool_.position;
  const Vec3 phi = rotation_increment(tool_.orientation, tool.orientation);
  const Vec3 p_mid = tool_.position + 0.5 * dp;
  const Vec3 a_mid = rotate_half(tool_.axis(), phi);
  const Vec3 v = twist.head<3>();
  const Vec3 w = twist.tail<3>();
  const double e0 = potential(tool_, s_);

  GuideStep out;
  double s1 = s_;

  if (mech_.kind == MechanismKind::kSlide)
  {
    const double k = mech_.stiffness;
    const double bm = mech_.mechanism_damping / dt;
    // Implicit midpoint for b_m ṡ = K a·(p - m(s)): exact energy balance
    // for the quadratic spring.
    const double c = mech_.axis.dot(p_mid - mech_.origin);
    s1 = (bm * s_ + k * (c - 0.5 * s_)) / (bm + 0.5 * k);
    const double s_mid = 0.5 * (s_ + s1);
    const Vec3 e_mid = p_mid - mech_.origin - s_mid * mech_.axis;
    out.wrench.force = -k * e_mid;

    // Rotational spring k(1 - a·n), discrete gradient in φ.
    const double kr = mech_.rot_stiffness;
    const double vr0 = kr * (1.0 - tool_.axis().dot(mech_.target_axis));
    const double vr1 = kr * (1.0 - tool.axis().dot(mech_.target_axis));
    Vec3 g = -kr * a_mid.cross(mech_.target_axis);
    const double phi2 = phi.squaredNorm();
    if (phi2 > kTinyAngle * kTinyAngle)
    {
      g += ((vr1 - vr0) - g.dot(phi)) / phi2 * phi;
    }
    out.wrench.torque = -g;

    const Vec3 v_perp = v - mech_.axis * mech_.axis.dot(v);
    out.wrench.force -= mech_.damping * v_perp;
    out.dissipated = mech_.mechanism_damping * (s1 - s_) * (s1 - s_) / dt + mech_.damping * v_perp.squaredNorm() * dt;
  }
  else
  {
    // Aim potential k(1 - a·n(p)), discrete gradient over (Δp, φ).
    const double kr = mech_.rot_stiffness;
    const Vec3 d = mech_.origin - p_mid;
    const double r = d.norm();
    Vec6 g = Vec6::Zero();
    if (r >= kTinyAngle)
    {
      const Vec3 n = d / r;
      g.head<3>() = kr * (a_mid - n * n.dot(a_mid)) / r;
      g.tail<3>() = -kr * a_mid.cross(n);
    }
    Vec6 dx;
    dx << dp, phi;
    const double dx2 = dx.squaredNorm();
    if (dx2 > kTinyAngle * kTinyAngle)
    {
      g += ((potential(tool, s_) - e0) - g.dot(dx)) / dx2 * dx;
    }
    out.wrench.force = -g.head<3>();
    out.wrench.torque = -g.tail<3>();
  }

  out.wrench.torque -= mech_.rot_damping * w;
  out.dissipated += mech_.rot_damping * w.squaredNorm() * dt;

  tool_ = tool;
  s_ = s1;
  out.spring_energy = potential(tool_, s_);
  return out;
}

double guide_angle_error(const Vec3& tool_axis, const Vec3& ideal_axis)
{
  // atan2 form of arccos(clamp(a·b)); accurate near 0 and pi.
  return std::atan2(tool_axis.cross(ideal_axis).norm(), std::clamp(tool_axis.dot(ideal_axis), -1.0, 1.0));
}

Vec3 rotation_increment(const Quaterniond& from, const Quaterniond& to)
{
  Quaterniond dq = to.normalized() * from.normalized().conjugate();
  if (dq.w() < 0.0)
  {
    dq.coeffs() = -dq.coeffs();
  }
  const double sn = dq.vec().norm();
  if (sn == 0.0)
  {
    return Vec3::Zero();
  }
  return 2.0 * std::atan2(sn, dq.w()) / sn * dq.vec();
}

Vec6 twist_between(const ToolPose& from, const ToolPose& to, double dt)
{
  Vec6 t;
  t << (to.position - from.position) / dt, rotation_increment(from.orientation, to.orientation) / dt;
  return t;
}

double GuideMetrics::rms() const
{
  if (angles.empty())
  {
    return 0.0;
  }
  double acc = 0.0;
  for (double a : angles)
  {
    acc += a * a;
  }
  return std::sqrt(acc / static_cast<double>(angles.size()));
}

}  // namespace dmu
