#pragma once

// Manikin trunk/head skeleton and the planar serial robot.
//
// Manikin convention: the trunk's forward axis y_m is local +y, so at
// theta_m = 0 the manikin faces world +y. The head joint composes yaw
// (theta_b, about z), then pitch (alpha_b, about the lateral x axis), then
// roll (beta_b, about the forward axis).

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

#include "dmu/errors.hpp"
#include "dmu/geometry.hpp"

namespace dmu
{

/// Closed interval [lo, hi] with lo < hi.
struct JointLimit
{
  double lo = -kPi;
  double hi = kPi;
};

struct ClampResult
{
  Eigen::VectorXd q;
  std::vector<bool> violated;

  [[nodiscard]] bool any() const;
};

/// Componentwise clamp into the closed limit intervals. A flag is set only
/// when a component had to move. Throws InvalidInput on size mismatch or
/// lo >= hi.
ClampResult clamp_to_limits(const Eigen::VectorXd& q, const std::vector<JointLimit>& limits);

/// Head joint angles q_b = (alpha_b, beta_b, theta_b).
struct HeadAngles
{
  double alpha = 0.0;  // pitch
  double beta = 0.0;   // roll
  double theta = 0.0;  // yaw

  [[nodiscard]] Eigen::Vector3d vec() const { return {alpha, beta, theta}; }
  static HeadAngles from(const Eigen::Vector3d& v) { return {v[0], v[1], v[2]}; }
};

struct HeadLimits
{
  JointLimit alpha{deg2rad(-45.0), deg2rad(60.0)};
  JointLimit beta{deg2rad(-40.0), deg2rad(40.0)};
  JointLimit theta{deg2rad(-60.0), deg2rad(60.0)};

  [[nodiscard]] std::vector<JointLimit> as_vector() const { return {alpha, beta, theta}; }
};

struct ManikinModel
{
  PlanarPose trunk;
  double trunk_height = 1.0;
  Vec3 eye_offset = Vec3::Zero();  // trunk frame, added on top of trunk_height
  HeadAngles head;
  HeadLimits limits;
  /// Floor footprint in the trunk frame, used by the repulsion criterion.
  std::optional<Polygon2> footprint;

  /// Throws InvalidInput when limits are malformed or the head is outside them.
  void validate() const;
};

struct EyeFrame
{
  Vec3 eye;          // S
  Vec3 vision_axis;  // y_s, unit
};

EyeFrame manikin_eye_frame(const ManikinModel& m);

/// Vision axis direction for a given trunk heading and head angles.
Vec3 vision_axis(double trunk_theta, const HeadAngles& head);

/// 2R branch selector: sign of sin(q2).
enum class Aspect : int
{
  kNegative = -1,
  kPositive = 1,
};

struct RobotModel
{
  PlanarPose base;
  std::vector<double> link_lengths;
  Eigen::VectorXd q;
  std::vector<JointLimit> limits;
  Aspect aspect = Aspect::kPositive;
  /// Base footprint in the base frame.
  std::optional<Polygon2> footprint;
  /// Width of the rectangles used as link collision shapes.
  double link_width = 0.05;

  [[nodiscard]] std::size_t dof() const { return link_lengths.size(); }
  void validate() const;
};

/// Branch of the current configuration (sign of sin q2; q2 == 0 keeps `fallback`).
Aspect aspect_of(const Eigen::VectorXd& q, Aspect fallback);

struct Target
{
  Vec3 position = Vec3::Zero();
  double size = 0.1;
};

/// End-effector pose: position in the floor plane, heading = base + sum(q).
PlanarPose robot_fk(const RobotModel& r);

/// Joint positions p_0 (base) ... p_n (end effector) in world coordinates.
std::vector<Vec2> robot_joint_positions(const RobotModel& r);

/// 3 x n analytic Jacobian of (x, y, heading) of the end effector w.r.t. q.
Eigen::MatrixXd robot_jacobian(const RobotModel& r);

/// Thrown when the target lies outside the reachable annulus.
class OutOfReach : public std::runtime_error
{
public:
  OutOfReach(const std::string& what, Vec2 closest) : std::runtime_error{what}, closest_{std::move(closest)} {}

  /// Closest reachable point, world frame.
  [[nodiscard]] const Vec2& closest_reachable() const { return closest_; }

private:
  Vec2 closest_;
};

struct IkResult
{
  Eigen::VectorXd q;
  std::vector<bool> limit_violated;
  bool limited = false;
};

/// Joint angles placing the end effector at `target` (world) on the branch
/// given by r.aspect. Two-link chains use the closed form; longer chains run
/// damped least squares from the current q. Results are clamped to limits.
IkResult ik_planar_preserving_aspect(const RobotModel& r, const Vec2& target);

/// Link rectangles (world frame) for collision checks; zero-length links skipped.
std::vector<Polygon2> robot_link_shapes(const RobotModel& r);

}  // namespace dmu
