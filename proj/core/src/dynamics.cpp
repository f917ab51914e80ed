#include "dmu/dynamics.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <string>

#include "dmu/geometry.hpp"

namespace dmu
{

namespace
{

bool is_symmetric(const MatrixXd& m, double tol)
{
  return m.rows() == m.cols() && (m - m.transpose()).cwiseAbs().maxCoeff() <= tol;
}

bool is_psd(const MatrixXd& m)
{
  if (m.size() == 0)
  {
    return true;
  }
  const Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return es.eigenvalues().minCoeff() >= -1e-12 * scale;
}

double condition_number(const MatrixXd& a)
{
  const Eigen::JacobiSVD<MatrixXd> svd(a);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0)
  {
    return 1.0;
  }
  const double lo = sv.minCoeff();
  return lo > 0.0 ? sv.maxCoeff() / lo : std::numeric_limits<double>::infinity();
}

}  // namespace

JointDynamics::JointDynamics(MatrixXd damping, double dt, std::vector<bool> wrap_mask)
  : damping_{std::move(damping)}, dt_{dt}, wrap_mask_{std::move(wrap_mask)}
{
  if (damping_.rows() == 0 || damping_.rows() != damping_.cols())
  {
    throw ConfigurationError("damping matrix must be square and non-empty");
  }
  if (!damping_.allFinite() || !is_symmetric(damping_, 1e-12))
  {
    throw ConfigurationError("damping matrix must be symmetric");
  }
  if (!(dt_ > 0.0) || !std::isfinite(dt_))
  {
    throw ConfigurationError("time step must be positive");
  }
  llt_.compute(damping_);
  if (llt_.info() != Eigen::Success)
  {
    throw ConfigurationError("damping matrix must be positive definite");
  }
  if (!wrap_mask_.empty() && static_cast<Eigen::Index>(wrap_mask_.size()) != damping_.rows())
  {
    throw ConfigurationError("wrap mask size does not match the joint count");
  }
}

MatrixXd JointDynamics::inverse() const { return llt_.solve(MatrixXd::Identity(dof(), dof())); }

VectorXd step_first_order(const JointDynamics& d, const VectorXd& q, const TorqueField& torque)
{
  if (q.size() != d.dof())
  {
    throw InvalidInput("joint vector size does not match the dynamics");
  }
  const double h = d.dt();
  const VectorXd k1 = d.velocity(torque(q));
  const VectorXd k2 = d.velocity(torque(q + 0.5 * h * k1));
  const VectorXd k3 = d.velocity(torque(q + 0.5 * h * k2));
  const VectorXd k4 = d.velocity(torque(q + h * k3));
  VectorXd next = q + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  for (std::size_t i = 0; i < d.wrap_mask().size(); ++i)
  {
    if (d.wrap_mask()[i])
    {
      const auto idx = static_cast<Eigen::Index>(i);
      next[idx] = wrap_angle(next[idx]);
    }
  }
  return next;
}

VectorXd step_first_order(const JointDynamics& d, const VectorXd& q, const VectorXd& torque)
{
  return step_first_order(d, q, [&torque](const VectorXd&) { return torque; });
}

void TaskGains::validate() const
{
  if (stiffness.rows() != stiffness.cols() || damping.rows() != damping.cols() ||
      stiffness.rows() != damping.rows())
  {
    throw InvalidInput("task gains must be square matrices of the same size");
  }
  if (!is_symmetric(stiffness, 1e-12) || !is_psd(stiffness))
  {
    throw InvalidInput("task stiffness must be symmetric positive semi-definite");
  }
  if (!is_symmetric(damping, 1e-12) || !is_psd(damping))
  {
    throw InvalidInput("task damping must be symmetric positive semi-definite");
  }
}

VectorXd task_force(const TaskGains& g, const VectorXd& x, const VectorXd& x_d, const VectorXd& v, const VectorXd& v_d)
{
  const auto n = g.stiffness.rows();
  if (x.size() != n || x_d.size() != n || v.size() != n || v_d.size() != n)
  {
    throw InvalidInput("task-space vectors do not match the gain dimension");
  }
  return g.stiffness * (x_d - x) + g.damping * (v_d - v);
}

JointVelocitySolution solve_joint_velocity(const MatrixXd& damping, const TaskGains& g, const MatrixXd& jacobian,
                                           const VectorXd& x, const VectorXd& x_d, const VectorXd& v_d,
                                           const JointVelocityOptions& opts)
{
  const auto m = g.stiffness.rows();
  const auto n = damping.rows();
  if (jacobian.rows() != m || jacobian.cols() != n || damping.cols() != n)
  {
    throw InvalidInput("Jacobian shape does not match gains and damping");
  }
  if (x.size() != m || x_d.size() != m || v_d.size() != m)
  {
    throw InvalidInput("task-space vectors do not match the Jacobian");
  }
  MatrixXd a = damping + jacobian.transpose() * g.damping * jacobian;
  const VectorXd rhs = jacobian.transpose() * (g.stiffness * (x_d - x) + g.damping * v_d);

  JointVelocitySolution out;
  out.condition = condition_number(a);
  if (!(out.condition <= opts.max_condition))
  {
    if (!opts.tikhonov)
    {
      throw SingularSystemError("B_a + JᵀB_cJ is singular (condition " + std::to_string(out.condition) + ")",
                                out.condition);
    }
    a.diagonal().array() += *opts.tikhonov;
    out.regularized = true;
  }
  const Eigen::LDLT<MatrixXd> ldlt(a);
  if (ldlt.info() != Eigen::Success)
  {
    throw SingularSystemError("factorization of B_a + JᵀB_cJ failed", out.condition);
  }
  out.qdot = ldlt.solve(rhs);
  return out;
}

JointVelocitySolution solve_joint_velocity(const JointDynamics& d, const TaskGains& g, const MatrixXd& jacobian,
                                           const VectorXd& x, const VectorXd& x_d, const VectorXd& v_d,
                                           const JointVelocityOptions& opts)
{
  return solve_joint_velocity(d.damping(), g, jacobian, x, x_d, v_d, opts);
}

MatrixXd null_space_projection(const MatrixXd& j1, const JointDynamics& d)
{
  const auto n = d.dof();
  if (j1.cols() != n)
  {
    throw InvalidInput("J1 column count does not match the dynamics");
  }
  if (j1.rows() == 0)
  {
    return MatrixXd::Identity(n, n);
  }
  // (J₁ B_a^{-1}) = (B_a^{-1} J₁ᵀ)ᵀ since B_a is symmetric.
  const MatrixXd m = d.solve(MatrixXd(j1.transpose())).transpose();
  const Eigen::JacobiSVD<MatrixXd> svd(m, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
  {
    if (sv[i] > 1e-10)
    {
      ++rank;
    }
  }
  const MatrixXd kernel = svd.matrixV().rightCols(n - rank);
  return kernel * kernel.transpose();
}

VectorXd internal_potential_torque(const MatrixXd& projection, const VectorXd& grad_u, double alpha)
{
  if (!(alpha >= 0.0))
  {
    throw InvalidInput("alpha must be non-negative");
  }
  if (projection.cols() != grad_u.size())
  {
    throw InvalidInput("projection and potential gradient sizes differ");
  }
  return -alpha * (projection * grad_u);
}

VectorXd external_port_velocity(const MatrixXd& j1, const JointDynamics& d, const VectorXd& w1,
                                const VectorXd& internal_torque)
{
  return j1 * d.velocity(j1.transpose() * w1 + internal_torque);
}

EnergyLedger::EnergyLedger(std::size_t ports) : accounts_(ports) {}

void EnergyLedger::record(std::size_t port, const VectorXd& wrench, const VectorXd& velocity, double dt)
{
  if (port >= accounts_.size())
  {
    throw InvalidInput("unknown port index");
  }
  if (!(dt > 0.0))
  {
    throw InvalidInput("dt must be positive");
  }
  if (wrench.size() != velocity.size())
  {
    throw InvalidInput("wrench and velocity sizes differ");
  }
  Account& a = accounts_[port];
  const double power = wrench.dot(velocity);
  if (a.has_sample)
  {
    a.energy += 0.5 * dt * (a.last_power + power);
  }
  a.last_power = power;
  a.has_sample = true;
  if (port == 0)
  {
    ++steps_;
  }
}

double EnergyLedger::energy(std::size_t port) const
{
  if (port >= accounts_.size())
  {
    throw InvalidInput("unknown port index");
  }
  return accounts_[port].energy;
}

double EnergyLedger::total() const
{
  double sum = 0.0;
  for (const auto& a : accounts_)
  {
    sum += a.energy;
  }
  return sum;
}

EnergyLedger& EnergyLedger::operator+=(const EnergyLedger& later)
{
  if (later.accounts_.size() != accounts_.size())
  {
    throw InvalidInput("ledgers have different port counts");
  }
  for (std::size_t i = 0; i < accounts_.size(); ++i)
  {
    accounts_[i].energy += later.accounts_[i].energy;
    if (later.accounts_[i].has_sample)
    {
      accounts_[i].last_power = later.accounts_[i].last_power;
      accounts_[i].has_sample = true;
    }
  }
  steps_ += later.steps_;
  return *this;
}

EnergyLedger port_energy(EnergyLedger ledger, std::size_t port, const VectorXd& wrench, const VectorXd& velocity,
                         double dt)
{
  ledger.record(port, wrench, velocity, dt);
  return ledger;
}

AlphaMonitor::AlphaMonitor(double alpha, double bound, std::size_t port) : alpha_{alpha}, bound_{bound}, port_{port}
{
  if (!(alpha >= 0.0))
  {
    throw InvalidInput("alpha must be non-negative");
  }
}

double AlphaMonitor::update(const EnergyLedger& ledger)
{
  if (ledger.energy(port_) < bound_)
  {
    alpha_ *= 0.5;
    ++reductions_;
  }
  return alpha_;
}

bool CounterexampleCertificate::holds(double tol) const
{
  return j2t_w2_norm > tol && balance_residual <= tol && coupling_residual <= tol && power < 0.0;
}

PassivityCounterexample build_passivity_counterexample(const MatrixXd& j1, const JointDynamics& d,
                                                       std::optional<VectorXd> w2)
{
  if (j1.cols() != d.dof() || j1.rows() == 0)
  {
    throw InvalidInput("J1 shape does not match the dynamics");
  }
  if (j1.cwiseAbs().maxCoeff() == 0.0)
  {
    throw InvalidInput("J1 = 0 admits no counterexample");
  }
  PassivityCounterexample ce;
  ce.j2 = j1;
  ce.w2 = w2 ? *w2 : VectorXd::Ones(j1.rows());
  if (ce.w2.size() != j1.rows())
  {
    throw InvalidInput("W2 size does not match the task dimension");
  }
  ce.w1 = -0.5 * ce.w2;
  ce.projection = null_space_projection(j1, d);

  CounterexampleCertificate& c = ce.certificate;
  c.j2t_w2_norm = (ce.j2.transpose() * ce.w2).norm();
  c.balance_residual = (j1.transpose() * ce.w1 + 0.5 * ce.j2.transpose() * ce.w2).norm();
  c.coupling_residual = (ce.j2 * d.solve(MatrixXd(ce.projection * ce.j2.transpose()))).norm();

  const MatrixXd s = j1 * d.solve(MatrixXd(j1.transpose()));
  const double w1_sq = ce.w1.squaredNorm();
  c.s = w1_sq > 0.0 ? ce.w1.dot(s * ce.w1) / w1_sq : 0.0;

  const VectorXd qdot = d.velocity(prioritized_torque(ce, j1));
  c.power = ce.w1.dot(j1 * qdot) + ce.w2.dot(ce.j2 * qdot);
  return ce;
}

VectorXd prioritized_torque(const PassivityCounterexample& ce, const MatrixXd& j1)
{
  return j1.transpose() * ce.w1 + ce.projection * (ce.j2.transpose() * ce.w2);
}

}  // namespace dmu
