#pragma once

// Passive virtual guides. A virtual mechanism is a small simulated body with
// restricted freedom (a slide along an axis, or a free point that only aims
// a direction) tied to the tool by a damped spring. The tool is never
// projected; it is only pulled, so the coupling stays passive.
//
// The spring wrench over one step is a discrete gradient of the spring
// potential between the previous and current tool pose, which makes the
// energy it delivers telescope exactly:
//
//   sum_k W_k · Δx_k = V_0 - V_N - (damper losses) <= V_0.

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <vector>

#include "dmu/geometry.hpp"

namespace dmu
{

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Eigen::Quaterniond;

/// Tool frame. The tool axis (drill bit, light beam) is the local +z axis.
struct ToolPose
{
  Vec3 position = Vec3::Zero();
  Quaterniond orientation = Quaterniond::Identity();

  [[nodiscard]] Vec3 axis() const { return orientation * Vec3::UnitZ(); }
};

/// Force then torque, world frame.
struct Wrench
{
  Vec3 force = Vec3::Zero();
  Vec3 torque = Vec3::Zero();

  [[nodiscard]] Vec6 stacked() const;
};

enum class MechanismKind
{
  kSlide,   // tool point on a line, tool axis along `target_axis`
  kAim,     // tool position free, tool axis aimed at `origin`
};

struct VirtualMechanism
{
  MechanismKind kind = MechanismKind::kSlide;
  Vec3 origin = Vec3::Zero();           // slide: point on the line; aim: aimed point
  Vec3 axis = Vec3::UnitZ();            // slide direction, unit
  Vec3 target_axis = Vec3::UnitZ();     // desired tool axis (slide), unit
  double stiffness = 500.0;             // K_g, N/m
  double rot_stiffness = 20.0;          // K_g, N·m/rad
  double damping = 20.0;                // B_g, N·s/m, across the free axis only
  double rot_damping = 0.2;             // N·m·s/rad
  double mechanism_damping = 5.0;       // b_m, N·s/m

  void validate() const;
};

struct GuideStep
{
  Wrench wrench;                // on the tool
  double spring_energy = 0.0;   // after the step
  double dissipated = 0.0;      // damper and mechanism losses this step (>= 0)
};

/// A mechanism attached to a tool: holds the mechanism's own state and the
/// last tool pose it has seen.
class Guide
{
public:
  /// Puts the slide at the closest point of its line to the tool origin.
  Guide(VirtualMechanism mech, const ToolPose& tool);

  [[nodiscard]] const VirtualMechanism& mechanism() const { return mech_; }
  [[nodiscard]] double slide() const { return s_; }
  [[nodiscard]] const ToolPose& tool() const { return tool_; }

  /// Mechanism point the tool is tied to.
  [[nodiscard]] Vec3 anchor() const;
  /// Tool axis the guide asks for at the current tool pose.
  [[nodiscard]] Vec3 ideal_axis() const;

  [[nodiscard]] double spring_energy() const;

  /// Wrench for the tool's motion from the last seen pose to `tool`. The
  /// spring part is the discrete gradient of the stored potential over that
  /// motion; `twist` (v, ω) drives the dampers. With twist equal to the
  /// pose increment over dt, wrench·twist·dt equals minus the change in
  /// stored energy minus the losses.
  GuideStep step(const ToolPose& tool, const Vec6& twist, double dt);

private:
  [[nodiscard]] double potential(const ToolPose& tool, double s) const;

  VirtualMechanism mech_;
  ToolPose tool_;
  double s_ = 0.0;
};

Guide attach_guide(const VirtualMechanism& mech, const ToolPose& tool);

/// arccos of the clamped dot product of two unit axes, in [0, pi].
double guide_angle_error(const Vec3& tool_axis, const Vec3& ideal_axis);

/// Rotation vector φ with to = exp(φ) from (world frame).
Vec3 rotation_increment(const Quaterniond& from, const Quaterniond& to);

/// Twist that moves `from` to `to` in dt at constant rate.
Vec6 twist_between(const ToolPose& from, const ToolPose& to, double dt);

struct GuideMetrics
{
  std::vector<double> angles;

  void record(double angle) { angles.push_back(angle); }
  [[nodiscard]] double rms() const;
};

}  // namespace dmu
