#include "dmu/constraints.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace dmu
{

void LcpProblem::validate() const
{
  if (m.rows() != m.cols() || m.rows() != b.size())
  {
    throw InvalidInput("LCP matrix must be square and match b");
  }
  if (!m.allFinite() || !b.allFinite())
  {
    throw InvalidInput("LCP data must be finite");
  }
}

double lcp_residual(const LcpProblem& p, const VectorXd& z)
{
  if (z.size() == 0)
  {
    return 0.0;
  }
  const VectorXd w = p.m * z + p.b;
  const double neg_w = std::max(0.0, -w.minCoeff());
  const double neg_z = std::max(0.0, -z.minCoeff());
  return std::max({neg_w, neg_z, std::abs(z.dot(w))});
}

namespace
{

LcpSolution make_solution(const LcpProblem& p, VectorXd z, int iterations)
{
  LcpSolution s;
  s.w = p.m * z + p.b;
  s.residual = lcp_residual(p, z);
  s.z = std::move(z);
  s.iterations = iterations;
  return s;
}

// Solve the complementarity system assuming exactly `support` is active.
bool polish(const LcpProblem& p, const std::vector<Eigen::Index>& support, VectorXd& z)
{
  const auto n = p.size();
  z = VectorXd::Zero(n);
  if (support.empty())
  {
    return true;
  }
  const auto k = static_cast<Eigen::Index>(support.size());
  MatrixXd maa(k, k);
  VectorXd ba(k);
  for (Eigen::Index r = 0; r < k; ++r)
  {
    ba[r] = p.b[support[static_cast<std::size_t>(r)]];
    for (Eigen::Index c = 0; c < k; ++c)
    {
      maa(r, c) = p.m(support[static_cast<std::size_t>(r)], support[static_cast<std::size_t>(c)]);
    }
  }
  const VectorXd za = maa.completeOrthogonalDecomposition().solve(-ba);
  if (!za.allFinite() || za.minCoeff() < 0.0)
  {
    return false;
  }
  for (Eigen::Index r = 0; r < k; ++r)
  {
    z[support[static_cast<std::size_t>(r)]] = za[r];
  }
  return true;
}

}  // namespace

LcpSolution solve_lcp(const LcpProblem& p, const LcpOptions& opts)
{
  p.validate();
  const auto n = p.size();
  if (n == 0 || p.b.minCoeff() >= 0.0)
  {
    return make_solution(p, VectorXd::Zero(n), 0);
  }

  VectorXd z = VectorXd::Zero(n);
  LcpSolution best = make_solution(p, z, 0);
  std::vector<Eigen::Index> support;
  std::vector<Eigen::Index> prev_support;
  VectorXd candidate;

  for (int it = 1; it <= opts.max_iterations; ++it)
  {
    for (Eigen::Index i = 0; i < n; ++i)
    {
      const double diag = p.m(i, i);
      if (diag <= 0.0)
      {
        continue;
      }
      const double r = p.m.row(i).dot(z) + p.b[i];
      z[i] = std::max(0.0, z[i] - opts.relaxation * r / diag);
    }

    support.clear();
    for (Eigen::Index i = 0; i < n; ++i)
    {
      if (z[i] > 0.0)
      {
        support.push_back(i);
      }
    }

    LcpSolution current = make_solution(p, z, it);
    if (current.residual < best.residual)
    {
      best = current;
    }
    if (support == prev_support && polish(p, support, candidate))
    {
      LcpSolution polished = make_solution(p, candidate, it);
      if (polished.residual <= opts.tolerance)
      {
        return polished;
      }
    }
    if (current.residual <= opts.tolerance)
    {
      return current;
    }
    prev_support = support;
  }
  throw LcpNonConvergence("projected Gauss-Seidel did not converge", best);
}

PlanarChainProbes::PlanarChainProbes(Vec2 base, std::vector<double> link_lengths)
  : base_{std::move(base)}, links_{std::move(link_lengths)}
{
  if (links_.empty())
  {
    throw InvalidInput("planar chain needs at least one link");
  }
}

RobotModel PlanarChainProbes::model(const VectorXd& q) const
{
  RobotModel r;
  r.base = PlanarPose{base_.x(), base_.y(), 0.0};
  r.link_lengths = links_;
  r.q = q;
  return r;
}

Vec2 PlanarChainProbes::probe_position(const VectorXd& q, std::size_t) const
{
  return robot_fk(model(q)).position();
}

MatrixXd PlanarChainProbes::probe_jacobian(const VectorXd& q, std::size_t) const
{
  return robot_jacobian(model(q)).topRows(2);
}

std::pair<double, Vec2> box_signed_distance(const Box2& box, const Vec2& p)
{
  const Vec2 c = p.cwiseMax(box.lo).cwiseMin(box.hi);
  const Vec2 d = p - c;
  const double dist = d.norm();
  if (dist > 0.0)
  {
    return {dist, d / dist};
  }
  const double faces[4] = {p.x() - box.lo.x(), box.hi.x() - p.x(), p.y() - box.lo.y(), box.hi.y() - p.y()};
  const Vec2 normals[4] = {-Vec2::UnitX(), Vec2::UnitX(), -Vec2::UnitY(), Vec2::UnitY()};
  const auto k = static_cast<std::size_t>(std::min_element(faces, faces + 4) - faces);
  return {-faces[k], normals[k]};
}

namespace
{

// A constraint is assembled when it is already within `threshold` or when
// the unconstrained motion would close its gap this step (speculative
// contact: with the gap/dt bias such a row only acts if it must). The
// approach estimate is doubled to cover curvature over the step.
bool near(double gap, double approach_rate, double dt, double threshold)
{
  return gap <= threshold + 2.0 * std::max(0.0, -approach_rate) * dt;
}

void collect_probe_contacts(const ContactWorld& world, const VectorXd& q, const VectorXd& qdot, double dt,
                            double threshold, ContactSet& out)
{
  const auto& kin = *world.kinematics;
  for (std::size_t pi = 0; pi < kin.probe_count(); ++pi)
  {
    const Vec2 pos = kin.probe_position(q, pi);
    const Vec2 vel = kin.probe_jacobian(q, pi) * qdot;
    for (const auto& h : world.planes)
    {
      const Vec2 n = h.normal.normalized();
      const double gap = n.dot(pos) - h.offset;
      if (near(gap, n.dot(vel), dt, threshold))
      {
        out.push_back({Contact::Kind::kProbe, pi, n, gap});
      }
    }
    for (const auto& b : world.boxes)
    {
      const auto [gap, n] = box_signed_distance(b, pos);
      if (near(gap, n.dot(vel), dt, threshold))
      {
        out.push_back({Contact::Kind::kProbe, pi, n, gap});
      }
    }
  }
}

void collect_limit_contacts(const ContactWorld& world, const VectorXd& q, const VectorXd& qdot, double dt,
                            double threshold, ContactSet& out)
{
  for (std::size_t j = 0; j < world.joint_limits.size(); ++j)
  {
    const auto idx = static_cast<Eigen::Index>(j);
    const JointLimit& l = world.joint_limits[j];
    if (near(q[idx] - l.lo, qdot[idx], dt, threshold))
    {
      out.push_back({Contact::Kind::kJointLimit, j, Vec2{1.0, 0.0}, q[idx] - l.lo});
    }
    if (near(l.hi - q[idx], -qdot[idx], dt, threshold))
    {
      out.push_back({Contact::Kind::kJointLimit, j, Vec2{-1.0, 0.0}, l.hi - q[idx]});
    }
  }
}

}  // namespace

ContactAssembly assemble_contacts(const ContactWorld& world, const VectorXd& q, const JointDynamics& d,
                                  const VectorXd& free_torque, const ContactOptions& opts)
{
  if (!world.kinematics)
  {
    throw InvalidInput("contact world has no kinematic model");
  }
  if (q.size() != d.dof() || world.kinematics->dof() != d.dof())
  {
    throw InvalidInput("contact world, dynamics and q disagree on the joint count");
  }
  if (!world.joint_limits.empty() && static_cast<Eigen::Index>(world.joint_limits.size()) != d.dof())
  {
    throw InvalidInput("joint limit list does not match the joint count");
  }

  ContactAssembly out;
  const VectorXd qdot_free = d.velocity(free_torque);
  collect_probe_contacts(world, q, qdot_free, d.dt(), opts.threshold, out.contacts);
  collect_limit_contacts(world, q, qdot_free, d.dt(), opts.threshold, out.contacts);

  const auto k = static_cast<Eigen::Index>(out.contacts.size());
  const auto n = d.dof();
  out.jacobian = MatrixXd::Zero(k, n);
  VectorXd bias(k);
  for (Eigen::Index r = 0; r < k; ++r)
  {
    const Contact& c = out.contacts[static_cast<std::size_t>(r)];
    if (c.kind == Contact::Kind::kProbe)
    {
      out.jacobian.row(r) = c.direction.transpose() * world.kinematics->probe_jacobian(q, c.index);
    }
    else
    {
      out.jacobian(r, static_cast<Eigen::Index>(c.index)) = c.direction.x();
    }
    // Closing at most the remaining gap this step; pushing out a fraction of
    // any penetration, capped.
    bias[r] = c.gap >= 0.0 ? c.gap / d.dt() : std::max(opts.baumgarte * c.gap / d.dt(), -opts.max_correction);
  }

  const MatrixXd binv_jt = d.solve(MatrixXd(out.jacobian.transpose()));
  out.lcp.m = out.jacobian * binv_jt;
  if (k > 0)
  {
    const double scale = std::max(1.0, out.lcp.m.diagonal().cwiseAbs().maxCoeff());
    out.lcp.m.diagonal().array() += opts.regularization * scale;
  }
  out.lcp.b = out.jacobian * qdot_free + bias;
  return out;
}

ConstrainedStep step_constrained(const JointDynamics& d, const VectorXd& q, const TorqueField& free_torque,
                                 const ContactWorld& world, const ContactOptions& copts, const LcpOptions& lopts)
{
  ConstrainedStep out;
  const VectorXd tau0 = free_torque(q);
  const ContactAssembly a = assemble_contacts(world, q, d, tau0, copts);
  out.contacts = a.contacts;
  if (a.contacts.empty())
  {
    out.q = step_first_order(d, q, free_torque);
    out.constraint_torque = VectorXd::Zero(q.size());
    return out;
  }
  out.lcp = solve_lcp(a.lcp, lopts);
  out.constraint_torque = a.jacobian.transpose() * out.lcp.z;
  const VectorXd& tc = out.constraint_torque;
  out.q = step_first_order(d, q, [&](const VectorXd& x) { return VectorXd(free_torque(x) + tc); });
  return out;
}

double min_probe_gap(const ContactWorld& world, const VectorXd& q)
{
  double gap = std::numeric_limits<double>::infinity();
  const auto& kin = *world.kinematics;
  for (std::size_t pi = 0; pi < kin.probe_count(); ++pi)
  {
    const Vec2 pos = kin.probe_position(q, pi);
    for (const auto& h : world.planes)
    {
      gap = std::min(gap, h.normal.normalized().dot(pos) - h.offset);
    }
    for (const auto& b : world.boxes)
    {
      gap = std::min(gap, box_signed_distance(b, pos).first);
    }
  }
  return gap;
}

}  // namespace dmu
