#pragma once

// Geometric primitives and the continuous collision / occlusion criteria the
// planning agents differentiate.
//
// Frames: world z is up, the floor is the x-y plane. Planar poses live on the
// floor; 3D boxes and segments are used for sight lines.

#include <Eigen/Core>

#include <functional>
#include <span>
#include <vector>

#include "dmu/errors.hpp"

namespace dmu
{

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

inline constexpr double kPi = 3.14159265358979323846;

inline constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Wraps an angle to (-pi, pi]. -pi maps to +pi.
double wrap_angle(double a);

/// Position and heading on the floor plane. theta is kept wrapped.
struct PlanarPose
{
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  PlanarPose() = default;
  PlanarPose(double x_, double y_, double theta_) : x{x_}, y{y_}, theta{wrap_angle(theta_)} {}

  [[nodiscard]] Vec2 position() const { return {x, y}; }

  /// Maps a point from this pose's local frame to the parent frame.
  [[nodiscard]] Vec2 apply(const Vec2& local) const;

  /// Pose offset by (dx, dy, dtheta), re-wrapping theta.
  [[nodiscard]] PlanarPose moved(double dx, double dy, double dtheta) const
  {
    return {x + dx, y + dy, theta + dtheta};
  }
};

/// Simple polygon stored counter-clockwise.
class Polygon2
{
public:
  /// Validates and stores the ring. Clockwise input is reversed. Throws
  /// InvalidInput for fewer than 3 vertices, zero area, non-finite
  /// coordinates or self-intersection.
  explicit Polygon2(std::vector<Vec2> vertices);

  /// Axis-aligned rectangle centred at (cx, cy).
  static Polygon2 rectangle(double cx, double cy, double width, double height);

  [[nodiscard]] const std::vector<Vec2>& vertices() const { return vertices_; }
  [[nodiscard]] std::size_t size() const { return vertices_.size(); }
  [[nodiscard]] double area() const;
  [[nodiscard]] double perimeter() const;

  /// Rigidly transforms a polygon given in `pose`'s local frame.
  [[nodiscard]] Polygon2 transformed(const PlanarPose& pose) const;

  /// Even-odd membership; points on the boundary may go either way.
  [[nodiscard]] bool contains(const Vec2& p) const;

private:
  struct Trusted {};
  Polygon2(std::vector<Vec2> vertices, Trusted) : vertices_{std::move(vertices)} {}

  std::vector<Vec2> vertices_;
};

/// Oriented box: yaw rotates about the world z axis through `center`.
struct Box3
{
  Vec3 center = Vec3::Zero();
  Vec3 half_extents = Vec3::Ones();
  double yaw = 0.0;

  Box3() = default;
  Box3(Vec3 c, Vec3 h, double yaw_ = 0.0);

  /// Box spanning [lo, hi] (axis aligned).
  static Box3 from_bounds(const Vec3& lo, const Vec3& hi);
};

struct Segment3
{
  Vec3 a = Vec3::Zero();
  Vec3 b = Vec3::Zero();

  [[nodiscard]] double length() const { return (b - a).norm(); }
};

/// Visibility cone: vertex at the eye, `aperture` is the half-angle between the
/// axis and the surface, `length` the distance from vertex to base plane.
struct Cone
{
  Vec3 vertex = Vec3::Zero();
  Vec3 axis = Vec3::UnitY();
  double aperture = deg2rad(2.0);
  double length = 1.0;

  [[nodiscard]] double slant_length() const;
};

/// Perimeter of the intersection region a ∩ b (the planar collision-line
/// length). Zero iff the interiors are disjoint.
double polygon_overlap_length(const Polygon2& a, const Polygon2& b);

/// Sum of polygon_overlap_length of `body` against every obstacle.
double total_overlap_length(const Polygon2& body, std::span<const Polygon2> obstacles);

/// Length of `s` inside the union of `boxes` (overlapping boxes not double counted).
double segment_occlusion_length(const Segment3& s, std::span<const Box3> boxes);

/// Mean occluded length over `n_rays` surface rays of the cone, evenly spaced
/// in azimuth. Throws InvalidInput when n_rays == 0.
double cone_occlusion_length(const Cone& c, std::span<const Box3> boxes, std::size_t n_rays = 16);

/// End points of the cone's surface rays (vertex to base circle), in azimuth order.
std::vector<Segment3> cone_surface_rays(const Cone& c, std::size_t n_rays);

struct FiniteDiffSteps
{
  double dx = 1e-4;
  double dy = 1e-4;
  double dtheta = 1e-4;
};

using PoseCriterion = std::function<double(const PlanarPose&)>;

/// Central-difference gradient (d/dx, d/dy, d/dtheta) of `criterion` at `p`.
/// Throws EvaluationFailure if any evaluation is non-finite, InvalidInput on
/// non-positive steps.
Vec3 finite_diff_gradient(const PoseCriterion& criterion, const PlanarPose& p,
                          const FiniteDiffSteps& h = {});

}  // namespace dmu
