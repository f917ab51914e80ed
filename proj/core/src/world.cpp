#include "dmu/world.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>

namespace dmu
{

PlanarPose WorldState::leading_pose() const
{
  if (subject == Subject::kRobot && robot)
  {
    return robot->base;
  }
  return manikin.trunk;
}

void WorldState::set_leading_pose(const PlanarPose& p)
{
  if (subject == Subject::kRobot && robot)
  {
    robot->base = p;
  }
  else
  {
    manikin.trunk = p;
  }
}

Vec3 eye_point_at(const WorldState& w, const PlanarPose& trunk)
{
  ManikinModel m = w.manikin;
  m.trunk = trunk;
  return manikin_eye_frame(m).eye;
}

Vec3 WorldState::eye_point() const { return manikin_eye_frame(manikin).eye; }

double WorldState::effective_max_aperture() const
{
  const double dist = (target.position - eye_point()).norm();
  if (dist > 0.0)
  {
    const double size_bound = std::atan(target.size / dist);
    if (size_bound > cone_limits.min_aperture)
    {
      return std::min(cone_limits.max_aperture, size_bound);
    }
  }
  return cone_limits.max_aperture;
}

namespace
{

Cone cone_for(const WorldState& w, const Vec3& eye)
{
  Cone c = w.cone;
  c.vertex = eye;
  const Vec3 st = w.target.position - eye;
  const double len = st.norm();
  if (len > 1e-9)
  {
    c.axis = st / len;
    c.length = len;
  }
  else
  {
    c.axis = manikin_eye_frame(w.manikin).vision_axis;
    c.length = 1e-9;
  }
  return c;
}

}  // namespace

void WorldState::refresh_cone()
{
  cone = cone_for(*this, eye_point());
  cone.aperture = std::clamp(cone.aperture, cone_limits.min_aperture, effective_max_aperture());
}

void WorldState::validate() const
{
  manikin.validate();
  if (robot)
  {
    robot->validate();
  }
  if (subject == Subject::kRobot && !robot)
  {
    throw InvalidInput("subject is the robot but no robot is defined");
  }
  if (!(target.size > 0.0) || !target.position.allFinite())
  {
    throw InvalidInput("target size must be positive");
  }
  if (!(cone_limits.min_aperture > 0.0 && cone_limits.min_aperture <= cone_limits.max_aperture &&
        cone_limits.max_aperture < 0.5 * kPi))
  {
    throw InvalidInput("cone limits must satisfy 0 < min <= max < 90 deg");
  }
}

std::vector<Polygon2> leading_shapes_at(const WorldState& w, const PlanarPose& pose)
{
  std::vector<Polygon2> shapes;
  if (w.subject == Subject::kRobot && w.robot)
  {
    RobotModel r = *w.robot;
    r.base = pose;
    if (r.footprint)
    {
      shapes.push_back(r.footprint->transformed(pose));
    }
    auto links = robot_link_shapes(r);
    shapes.insert(shapes.end(), links.begin(), links.end());
  }
  else if (w.manikin.footprint)
  {
    shapes.push_back(w.manikin.footprint->transformed(pose));
  }
  return shapes;
}

double collision_length_at(const WorldState& w, const PlanarPose& pose)
{
  double sum = 0.0;
  for (const auto& shape : leading_shapes_at(w, pose))
  {
    sum += total_overlap_length(shape, w.scene.polygons);
  }
  return sum;
}

double collision_length(const WorldState& w) { return collision_length_at(w, w.leading_pose()); }

double st_occlusion_at(const WorldState& w, const PlanarPose& pose)
{
  return segment_occlusion_length({eye_point_at(w, pose), w.target.position}, w.scene.boxes);
}

double st_occlusion(const WorldState& w) { return st_occlusion_at(w, w.manikin.trunk); }

double cone_occlusion_at(const WorldState& w, const PlanarPose& pose, std::size_t n_rays)
{
  return cone_occlusion_length(cone_for(w, eye_point_at(w, pose)), w.scene.boxes, n_rays);
}

double cone_occlusion(const WorldState& w, std::size_t n_rays)
{
  return cone_occlusion_at(w, w.manikin.trunk, n_rays);
}

double distance_to_target(const WorldState& w)
{
  const Vec2 goal = w.target.position.head<2>();
  if (w.subject == Subject::kRobot && w.robot)
  {
    return (robot_fk(*w.robot).position() - goal).norm();
  }
  return (w.manikin.trunk.position() - goal).norm();
}

}  // namespace dmu
