#pragma once

// The blackboard's shared state and the criteria every agent reads from it.

#include <cstdint>
#include <optional>
#include <vector>

#include "dmu/geometry.hpp"
#include "dmu/kinematics.hpp"

namespace dmu
{

struct Scene
{
  std::vector<Polygon2> polygons;  // floor footprints, repulsion
  std::vector<Box3> boxes;         // 3D volumes, sight-line occlusion
};

/// Which body the trunk-level contributions move: the manikin trunk or the
/// robot base.
enum class Subject
{
  kManikin,
  kRobot,
};

struct ConeLimits
{
  double min_aperture = deg2rad(2.0);
  double max_aperture = deg2rad(30.0);
};

struct WorldState
{
  ManikinModel manikin;
  std::optional<RobotModel> robot;
  Subject subject = Subject::kManikin;
  Scene scene;
  Target target;
  Cone cone;
  ConeLimits cone_limits;
  std::uint64_t tick = 0;
  std::optional<PlanarPose> manipulated_object;

  [[nodiscard]] PlanarPose leading_pose() const;
  void set_leading_pose(const PlanarPose& p);

  /// Eye point S of the manikin.
  [[nodiscard]] Vec3 eye_point() const;

  /// Upper aperture bound: max_aperture, further capped by
  /// atan(target.size / |ST|) when that exceeds min_aperture.
  [[nodiscard]] double effective_max_aperture() const;

  /// Recomputes the cone's vertex, axis (towards the target) and length from
  /// the current manikin pose, and clamps the aperture into range.
  void refresh_cone();

  /// Throws InvalidInput when any contained invariant is broken.
  void validate() const;
};

/// Eye point for a hypothetical trunk pose.
Vec3 eye_point_at(const WorldState& w, const PlanarPose& trunk);

/// Floor shapes of the leading body placed at `pose`.
std::vector<Polygon2> leading_shapes_at(const WorldState& w, const PlanarPose& pose);

/// Total collision-line length of the leading body at `pose`.
double collision_length_at(const WorldState& w, const PlanarPose& pose);
double collision_length(const WorldState& w);

/// Occluded length of the sight segment ST for a trunk at `pose`.
double st_occlusion_at(const WorldState& w, const PlanarPose& pose);
double st_occlusion(const WorldState& w);

/// Cone occlusion with the cone rebuilt for a trunk at `pose`.
double cone_occlusion_at(const WorldState& w, const PlanarPose& pose, std::size_t n_rays = 16);
double cone_occlusion(const WorldState& w, std::size_t n_rays = 16);

/// Floor-plane distance from the leading body (manikin trunk, or robot end
/// effector) to the target.
double distance_to_target(const WorldState& w);

}  // namespace dmu
