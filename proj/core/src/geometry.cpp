#include "dmu/geometry.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace dmu
{

double wrap_angle(double a)
{
  double r = std::remainder(a, 2.0 * kPi);
  if (r <= -kPi)
  {
    r += 2.0 * kPi;
  }
  return r;
}

Vec2 PlanarPose::apply(const Vec2& local) const
{
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return {x + c * local.x() - s * local.y(), y + s * local.x() + c * local.y()};
}

namespace
{

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

double signed_area(const std::vector<Vec2>& v)
{
  double twice = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
  {
    twice += cross2(v[i], v[(i + 1) % v.size()]);
  }
  return 0.5 * twice;
}

double coordinate_scale(const std::vector<Vec2>& v)
{
  double s = 0.0;
  for (const auto& p : v)
  {
    s = std::max({s, std::abs(p.x()), std::abs(p.y())});
  }
  return s;
}

// Closed-segment intersection test used by the simplicity check.
bool segments_touch(const Vec2& p, const Vec2& q, const Vec2& r, const Vec2& s, double eps)
{
  const Vec2 d1 = q - p;
  const Vec2 d2 = s - r;
  const double denom = cross2(d1, d2);
  const Vec2 pr = r - p;
  if (std::abs(denom) <= eps * (d1.norm() * d2.norm() + eps))
  {
    if (std::abs(cross2(pr, d1)) > eps * (d1.norm() + 1.0))
    {
      return false;
    }
    const double len2 = d1.squaredNorm();
    if (len2 == 0.0)
    {
      return false;
    }
    const double t0 = pr.dot(d1) / len2;
    const double t1 = (s - p).dot(d1) / len2;
    return std::max(t0, t1) >= -eps && std::min(t0, t1) <= 1.0 + eps;
  }
  const double t = cross2(pr, d2) / denom;
  const double u = cross2(pr, d1) / denom;
  return t >= -eps && t <= 1.0 + eps && u >= -eps && u <= 1.0 + eps;
}

void require_simple(const std::vector<Vec2>& v)
{
  const std::size_t n = v.size();
  const double eps = 1e-12;
  for (std::size_t i = 0; i < n; ++i)
  {
    const Vec2& a = v[i];
    const Vec2& b = v[(i + 1) % n];
    if ((b - a).norm() == 0.0)
    {
      throw InvalidInput("polygon has a repeated vertex at index " + std::to_string(i));
    }
    // Adjacent edge folding back onto this one.
    const Vec2& c = v[(i + 2) % n];
    if (std::abs(cross2(b - a, c - b)) <= eps * (b - a).norm() * (c - b).norm() &&
        (b - a).dot(c - b) < 0.0)
    {
      throw InvalidInput("polygon folds back on itself at vertex " + std::to_string((i + 1) % n));
    }
    for (std::size_t j = i + 2; j < n; ++j)
    {
      if (i == 0 && j == n - 1)
      {
        continue;  // adjacent through the closing edge
      }
      if (segments_touch(a, b, v[j], v[(j + 1) % n], eps))
      {
        throw InvalidInput("polygon is self-intersecting (edges " + std::to_string(i) + " and " +
                           std::to_string(j) + ")");
      }
    }
  }
}

}  // namespace

Polygon2::Polygon2(std::vector<Vec2> vertices) : vertices_{std::move(vertices)}
{
  if (vertices_.size() < 3)
  {
    throw InvalidInput("polygon needs at least 3 vertices");
  }
  for (const auto& p : vertices_)
  {
    if (!p.allFinite())
    {
      throw InvalidInput("polygon vertex is not finite");
    }
  }
  const double area = signed_area(vertices_);
  if (std::abs(area) <= 1e-14 * (1.0 + coordinate_scale(vertices_)))
  {
    throw InvalidInput("polygon has zero area");
  }
  require_simple(vertices_);
  if (area < 0.0)
  {
    std::reverse(vertices_.begin(), vertices_.end());
  }
}

Polygon2 Polygon2::rectangle(double cx, double cy, double width, double height)
{
  const double hx = 0.5 * width;
  const double hy = 0.5 * height;
  return Polygon2({{cx - hx, cy - hy}, {cx + hx, cy - hy}, {cx + hx, cy + hy}, {cx - hx, cy + hy}});
}

double Polygon2::area() const { return signed_area(vertices_); }

double Polygon2::perimeter() const
{
  double p = 0.0;
  for (std::size_t i = 0; i < vertices_.size(); ++i)
  {
    p += (vertices_[(i + 1) % vertices_.size()] - vertices_[i]).norm();
  }
  return p;
}

Polygon2 Polygon2::transformed(const PlanarPose& pose) const
{
  std::vector<Vec2> out;
  out.reserve(vertices_.size());
  for (const auto& v : vertices_)
  {
    out.push_back(pose.apply(v));
  }
  // Rigid motions keep simplicity and orientation.
  return Polygon2(std::move(out), Trusted{});
}

bool Polygon2::contains(const Vec2& p) const
{
  bool inside = false;
  const std::size_t n = vertices_.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++)
  {
    const Vec2& a = vertices_[i];
    const Vec2& b = vertices_[j];
    if ((a.y() > p.y()) != (b.y() > p.y()))
    {
      const double x_cross = b.x() + (p.y() - b.y()) * (a.x() - b.x()) / (a.y() - b.y());
      if (p.x() < x_cross)
      {
        inside = !inside;
      }
    }
  }
  return inside;
}

namespace
{

// Length of the boundary of `a` lying in the closure of `b`. Pieces running
// along b's boundary count only when `count_shared` is set and the two edges
// point the same way (interiors on the same side); this keeps shared
// boundary from being counted twice when the routine runs both ways.
double boundary_inside(const Polygon2& a, const Polygon2& b, bool count_shared, double eps)
{
  const auto& av = a.vertices();
  const auto& bv = b.vertices();
  const std::size_t na = av.size();
  const std::size_t nb = bv.size();

  double total = 0.0;
  std::vector<double> cuts;
  for (std::size_t i = 0; i < na; ++i)
  {
    const Vec2& p = av[i];
    const Vec2& q = av[(i + 1) % na];
    const Vec2 d = q - p;
    const double len = d.norm();
    const double len2 = d.squaredNorm();

    cuts.clear();
    cuts.push_back(0.0);
    cuts.push_back(1.0);
    for (std::size_t j = 0; j < nb; ++j)
    {
      const Vec2& r = bv[j];
      const Vec2& s = bv[(j + 1) % nb];
      const Vec2 e = s - r;
      const double denom = cross2(d, e);
      const Vec2 pr = r - p;
      if (std::abs(denom) <= eps * len * e.norm())
      {
        if (std::abs(cross2(pr, d)) <= eps * len)
        {
          cuts.push_back(pr.dot(d) / len2);
          cuts.push_back((s - p).dot(d) / len2);
        }
        continue;
      }
      const double t = cross2(pr, e) / denom;
      const double u = cross2(pr, d) / denom;
      if (u >= -eps && u <= 1.0 + eps)
      {
        cuts.push_back(t);
      }
    }
    for (double& c : cuts)
    {
      c = std::clamp(c, 0.0, 1.0);
    }
    std::sort(cuts.begin(), cuts.end());

    for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
    {
      const double t0 = cuts[k];
      const double t1 = cuts[k + 1];
      if (t1 - t0 <= 0.0)
      {
        continue;
      }
      const Vec2 mid = p + 0.5 * (t0 + t1) * d;

      // Is the piece running along an edge of b?
      int on_edge = -1;
      for (std::size_t j = 0; j < nb; ++j)
      {
        const Vec2& r = bv[j];
        const Vec2 e = bv[(j + 1) % nb] - r;
        const double el2 = e.squaredNorm();
        const double u = std::clamp((mid - r).dot(e) / el2, 0.0, 1.0);
        if ((mid - (r + u * e)).norm() <= eps)
        {
          on_edge = static_cast<int>(j);
          break;
        }
      }
      bool counted = false;
      if (on_edge >= 0)
      {
        const Vec2 e = bv[(static_cast<std::size_t>(on_edge) + 1) % nb] - bv[static_cast<std::size_t>(on_edge)];
        counted = count_shared && e.dot(d) > 0.0;
      }
      else
      {
        counted = b.contains(mid);
      }
      if (counted)
      {
        total += (t1 - t0) * len;
      }
    }
  }
  return total;
}

double overlap_tolerance(const Polygon2& a, const Polygon2& b)
{
  const double scale = std::max(coordinate_scale(a.vertices()), coordinate_scale(b.vertices()));
  return 1e-12 * (1.0 + scale);
}

bool bounding_boxes_disjoint(const Polygon2& a, const Polygon2& b)
{
  Vec2 alo = a.vertices().front();
  Vec2 ahi = alo;
  for (const auto& v : a.vertices())
  {
    alo = alo.cwiseMin(v);
    ahi = ahi.cwiseMax(v);
  }
  Vec2 blo = b.vertices().front();
  Vec2 bhi = blo;
  for (const auto& v : b.vertices())
  {
    blo = blo.cwiseMin(v);
    bhi = bhi.cwiseMax(v);
  }
  return ahi.x() < blo.x() || bhi.x() < alo.x() || ahi.y() < blo.y() || bhi.y() < alo.y();
}

}  // namespace

double polygon_overlap_length(const Polygon2& a, const Polygon2& b)
{
  if (bounding_boxes_disjoint(a, b))
  {
    return 0.0;
  }
  // ∂(a∩b) = (∂a ∩ b) ∪ (∂b ∩ a); shared boundary is attributed to `a` only.
  const double eps = overlap_tolerance(a, b);
  return boundary_inside(a, b, true, eps) + boundary_inside(b, a, false, eps);
}

double total_overlap_length(const Polygon2& body, std::span<const Polygon2> obstacles)
{
  double sum = 0.0;
  for (const auto& o : obstacles)
  {
    sum += polygon_overlap_length(body, o);
  }
  return sum;
}

Box3::Box3(Vec3 c, Vec3 h, double yaw_) : center{std::move(c)}, half_extents{std::move(h)}, yaw{yaw_}
{
  if (!(half_extents.array() > 0.0).all() || !half_extents.allFinite())
  {
    throw InvalidInput("box half extents must be positive");
  }
  if (!center.allFinite() || !std::isfinite(yaw))
  {
    throw InvalidInput("box center and yaw must be finite");
  }
}

Box3 Box3::from_bounds(const Vec3& lo, const Vec3& hi)
{
  return Box3(0.5 * (lo + hi), 0.5 * (hi - lo), 0.0);
}

double Cone::slant_length() const { return length / std::cos(aperture); }

namespace
{

// Parameter interval of the segment inside one box, if any.
bool clip_to_box(const Segment3& s, const Box3& box, double& t_enter, double& t_exit)
{
  const double c = std::cos(box.yaw);
  const double sn = std::sin(box.yaw);
  auto to_local = [&](const Vec3& p) {
    const Vec3 d = p - box.center;
    return Vec3{c * d.x() + sn * d.y(), -sn * d.x() + c * d.y(), d.z()};
  };
  const Vec3 a = to_local(s.a);
  const Vec3 dir = to_local(s.b) - a;

  t_enter = 0.0;
  t_exit = 1.0;
  for (int i = 0; i < 3; ++i)
  {
    const double h = box.half_extents[i];
    if (dir[i] == 0.0)
    {
      if (a[i] < -h || a[i] > h)
      {
        return false;
      }
      continue;
    }
    double t0 = (-h - a[i]) / dir[i];
    double t1 = (h - a[i]) / dir[i];
    if (t0 > t1)
    {
      std::swap(t0, t1);
    }
    t_enter = std::max(t_enter, t0);
    t_exit = std::min(t_exit, t1);
    if (t_enter >= t_exit)
    {
      return false;
    }
  }
  return true;
}

}  // namespace

double segment_occlusion_length(const Segment3& s, std::span<const Box3> boxes)
{
  const double len = s.length();
  if (len == 0.0 || boxes.empty())
  {
    return 0.0;
  }
  std::vector<std::pair<double, double>> spans;
  spans.reserve(boxes.size());
  for (const auto& box : boxes)
  {
    double t0 = 0.0;
    double t1 = 0.0;
    if (clip_to_box(s, box, t0, t1))
    {
      spans.emplace_back(t0, t1);
    }
  }
  if (spans.empty())
  {
    return 0.0;
  }
  std::sort(spans.begin(), spans.end());
  double covered = 0.0;
  double cur_lo = spans.front().first;
  double cur_hi = spans.front().second;
  for (std::size_t i = 1; i < spans.size(); ++i)
  {
    if (spans[i].first > cur_hi)
    {
      covered += cur_hi - cur_lo;
      cur_lo = spans[i].first;
      cur_hi = spans[i].second;
    }
    else
    {
      cur_hi = std::max(cur_hi, spans[i].second);
    }
  }
  covered += cur_hi - cur_lo;
  return covered * len;
}

std::vector<Segment3> cone_surface_rays(const Cone& c, std::size_t n_rays)
{
  if (n_rays == 0)
  {
    throw InvalidInput("cone occlusion needs at least one ray");
  }
  const Vec3 axis = c.axis.normalized();
  // Reference direction: the world axis least aligned with the cone axis.
  Eigen::Index least = 0;
  axis.cwiseAbs().minCoeff(&least);
  const Vec3 e1 = axis.cross(Vec3::Unit(least)).normalized();
  const Vec3 e2 = axis.cross(e1);
  const Vec3 base_center = c.vertex + c.length * axis;
  const double radius = c.length * std::tan(c.aperture);

  std::vector<Segment3> rays;
  rays.reserve(n_rays);
  for (std::size_t k = 0; k < n_rays; ++k)
  {
    const double phi = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(n_rays);
    rays.push_back({c.vertex, base_center + radius * (std::cos(phi) * e1 + std::sin(phi) * e2)});
  }
  return rays;
}

double cone_occlusion_length(const Cone& c, std::span<const Box3> boxes, std::size_t n_rays)
{
  const auto rays = cone_surface_rays(c, n_rays);
  if (boxes.empty())
  {
    return 0.0;
  }
  double sum = 0.0;
  for (const auto& r : rays)
  {
    sum += segment_occlusion_length(r, boxes);
  }
  return sum / static_cast<double>(n_rays);
}

Vec3 finite_diff_gradient(const PoseCriterion& criterion, const PlanarPose& p, const FiniteDiffSteps& h)
{
  if (!(h.dx > 0.0 && h.dy > 0.0 && h.dtheta > 0.0))
  {
    throw InvalidInput("finite-difference steps must be positive");
  }
  auto eval = [&](const PlanarPose& at) {
    const double v = criterion(at);
    if (!std::isfinite(v))
    {
      throw EvaluationFailure("criterion returned a non-finite value");
    }
    return v;
  };
  // theta is perturbed without wrapping so the stencil stays symmetric.
  auto shifted = [&](double dx, double dy, double dth) {
    PlanarPose q = p;
    q.x += dx;
    q.y += dy;
    q.theta += dth;
    return q;
  };
  return {(eval(shifted(h.dx, 0, 0)) - eval(shifted(-h.dx, 0, 0))) / (2.0 * h.dx),
          (eval(shifted(0, h.dy, 0)) - eval(shifted(0, -h.dy, 0))) / (2.0 * h.dy),
          (eval(shifted(0, 0, h.dtheta)) - eval(shifted(0, 0, -h.dtheta))) / (2.0 * h.dtheta)};
}

}  // namespace dmu
