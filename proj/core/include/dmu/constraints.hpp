#pragma once

// Unilateral constraints (non-penetration, joint limits) resolved each step
// as a velocity-level linear complementarity problem
//
//   w = M z + b,  z >= 0,  w >= 0,  zᵀw = 0
//
// with M = J_c B^{-1} J_cᵀ and z the constraint forces.

#include <Eigen/Core>

#include <memory>
#include <stdexcept>
#include <vector>

#include "dmu/dynamics.hpp"
#include "dmu/geometry.hpp"
#include "dmu/kinematics.hpp"

namespace dmu
{

struct LcpProblem
{
  MatrixXd m;
  VectorXd b;

  [[nodiscard]] Eigen::Index size() const { return b.size(); }
  void validate() const;
};

struct LcpOptions
{
  double tolerance = 1e-8;
  int max_iterations = 500;
  double relaxation = 1.0;
};

struct LcpSolution
{
  VectorXd z;
  VectorXd w;
  double residual = 0.0;
  int iterations = 0;
};

/// max(max_i(-w_i, 0), max_i(-z_i, 0), |zᵀw|).
double lcp_residual(const LcpProblem& p, const VectorXd& z);

class LcpNonConvergence : public std::runtime_error
{
public:
  LcpNonConvergence(const std::string& what, LcpSolution best) : std::runtime_error{what}, best_{std::move(best)} {}
  [[nodiscard]] const LcpSolution& best() const { return best_; }

private:
  LcpSolution best_;
};

/// Projected Gauss-Seidel with over-relaxation. Whenever the support set
/// {z_i > 0} is unchanged between sweeps the reduced linear system is solved
/// directly and accepted if it satisfies the tolerance.
LcpSolution solve_lcp(const LcpProblem& p, const LcpOptions& opts = {});

/// Position and Jacobian of contact probes (hand point, tool tip, ...) in a
/// vertical working plane with coordinates (x, z).
class ProbeKinematics
{
public:
  virtual ~ProbeKinematics() = default;
  [[nodiscard]] virtual Eigen::Index dof() const = 0;
  [[nodiscard]] virtual std::size_t probe_count() const = 0;
  [[nodiscard]] virtual Vec2 probe_position(const VectorXd& q, std::size_t probe) const = 0;
  /// 2 x dof.
  [[nodiscard]] virtual MatrixXd probe_jacobian(const VectorXd& q, std::size_t probe) const = 0;
};

/// q = (x, z); the single probe is the point itself.
class PointMass2 final : public ProbeKinematics
{
public:
  [[nodiscard]] Eigen::Index dof() const override { return 2; }
  [[nodiscard]] std::size_t probe_count() const override { return 1; }
  [[nodiscard]] Vec2 probe_position(const VectorXd& q, std::size_t) const override { return q.head<2>(); }
  [[nodiscard]] MatrixXd probe_jacobian(const VectorXd&, std::size_t) const override
  {
    return MatrixXd::Identity(2, 2);
  }
};

/// Revolute chain in the working plane; the probe is the chain tip.
class PlanarChainProbes final : public ProbeKinematics
{
public:
  PlanarChainProbes(Vec2 base, std::vector<double> link_lengths);

  [[nodiscard]] Eigen::Index dof() const override { return static_cast<Eigen::Index>(links_.size()); }
  [[nodiscard]] std::size_t probe_count() const override { return 1; }
  [[nodiscard]] Vec2 probe_position(const VectorXd& q, std::size_t probe) const override;
  [[nodiscard]] MatrixXd probe_jacobian(const VectorXd& q, std::size_t probe) const override;

private:
  [[nodiscard]] RobotModel model(const VectorXd& q) const;
  Vec2 base_;
  std::vector<double> links_;
};

/// n · p >= offset is free space.
struct HalfSpace2
{
  Vec2 normal = Vec2::UnitY();
  double offset = 0.0;
};

/// Axis-aligned solid rectangle in the working plane.
struct Box2
{
  Vec2 lo = Vec2::Zero();
  Vec2 hi = Vec2::Ones();
};

/// Signed distance from p to the box surface (negative inside) and the
/// outward normal of the closest feature.
std::pair<double, Vec2> box_signed_distance(const Box2& box, const Vec2& p);

struct ContactWorld
{
  std::shared_ptr<const ProbeKinematics> kinematics;
  std::vector<HalfSpace2> planes;
  std::vector<Box2> boxes;
  std::vector<JointLimit> joint_limits;  // empty: no limit rows
};

struct Contact
{
  enum class Kind
  {
    kProbe,
    kJointLimit,
  };
  Kind kind = Kind::kProbe;
  std::size_t index = 0;  // probe index or joint index
  Vec2 direction = Vec2::UnitY();  // probe: unit normal; joint: (±1, 0)
  double gap = 0.0;
  double restitution = 0.0;
};

using ContactSet = std::vector<Contact>;

struct ContactOptions
{
  double threshold = 1e-3;
  double baumgarte = 0.2;         // fraction of penetration removed per step
  double max_correction = 0.5;    // cap on the push-out speed
  double regularization = 1e-12;  // relative diagonal term on M
};

struct ContactAssembly
{
  ContactSet contacts;
  LcpProblem lcp;
  MatrixXd jacobian;  // rows: constraint directions in joint space
};

/// One row per proximity with gap <= threshold, or whose gap the free
/// motion would close within the step (probe vs planes/boxes, and
/// joint-limit rows). b holds the predicted constraint velocity under
/// Γ_free plus the gap stabilization term.
ContactAssembly assemble_contacts(const ContactWorld& world, const VectorXd& q, const JointDynamics& d,
                                  const VectorXd& free_torque, const ContactOptions& opts = {});

struct ConstrainedStep
{
  VectorXd q;
  ContactSet contacts;
  LcpSolution lcp;
  VectorXd constraint_torque;
};

/// Adds LCP constraint torques to Γ_free and advances one RK4 step. With no
/// active contact this is exactly step_first_order.
ConstrainedStep step_constrained(const JointDynamics& d, const VectorXd& q, const TorqueField& free_torque,
                                 const ContactWorld& world, const ContactOptions& copts = {},
                                 const LcpOptions& lopts = {});

/// Smallest gap over probes and obstacles (negative means penetration).
double min_probe_gap(const ContactWorld& world, const VectorXd& q);

}  // namespace dmu
