#pragma once

// First-order joint dynamics B_a q̇ = Γ, task-space PD control, null-space
// projection, port energy accounting, and the construction showing that a
// prioritizing projection can break passivity.

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "dmu/errors.hpp"

namespace dmu
{

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Joint-space damping model. B_a must be symmetric (1e-12) and positive
/// definite; both are checked at construction.
class JointDynamics
{
public:
  JointDynamics(MatrixXd damping, double dt, std::vector<bool> wrap_mask = {});

  [[nodiscard]] const MatrixXd& damping() const { return damping_; }
  [[nodiscard]] double dt() const { return dt_; }
  [[nodiscard]] Eigen::Index dof() const { return damping_.rows(); }
  [[nodiscard]] const std::vector<bool>& wrap_mask() const { return wrap_mask_; }

  /// B_a^{-1} x.
  [[nodiscard]] VectorXd solve(const VectorXd& x) const { return llt_.solve(x); }
  [[nodiscard]] MatrixXd solve(const MatrixXd& x) const { return llt_.solve(x); }
  [[nodiscard]] MatrixXd inverse() const;

  /// Joint velocity q̇ = B_a^{-1} Γ.
  [[nodiscard]] VectorXd velocity(const VectorXd& torque) const { return llt_.solve(torque); }

private:
  MatrixXd damping_;
  double dt_;
  std::vector<bool> wrap_mask_;
  Eigen::LLT<MatrixXd> llt_;
};

using TorqueField = std::function<VectorXd(const VectorXd& q)>;

/// One classical RK4 step of q̇ = B_a^{-1} Γ(q). Coordinates flagged in the
/// wrap mask are wrapped to (-pi, pi].
VectorXd step_first_order(const JointDynamics& d, const VectorXd& q, const TorqueField& torque);
VectorXd step_first_order(const JointDynamics& d, const VectorXd& q, const VectorXd& torque);

struct TaskGains
{
  MatrixXd stiffness;  // K
  MatrixXd damping;    // B_c

  /// Both symmetric positive semi-definite and the same square size.
  void validate() const;
};

/// f_ctrl = K (x_d - x) + B_c (v_d - v).
VectorXd task_force(const TaskGains& g, const VectorXd& x, const VectorXd& x_d, const VectorXd& v,
                    const VectorXd& v_d);

/// (B_a + Jᵀ B_c J) is too ill-conditioned to solve.
class SingularSystemError : public std::runtime_error
{
public:
  SingularSystemError(const std::string& what, double condition)
    : std::runtime_error{what}, condition_{condition}
  {
  }
  [[nodiscard]] double condition() const { return condition_; }

private:
  double condition_;
};

struct JointVelocityOptions
{
  double max_condition = 1e12;
  /// Opt-in Tikhonov term added to the diagonal when the system is singular.
  std::optional<double> tikhonov;
};

struct JointVelocitySolution
{
  VectorXd qdot;
  double condition = 0.0;  // estimate for the unregularized system
  bool regularized = false;
};

/// q̇ = (B_a + JᵀB_cJ)^{-1} Jᵀ (K (x_d - x) + B_c v_d). `damping` may be
/// singular here; singular systems raise SingularSystemError unless
/// Tikhonov regularization was requested.
JointVelocitySolution solve_joint_velocity(const MatrixXd& damping, const TaskGains& g, const MatrixXd& jacobian,
                                           const VectorXd& x, const VectorXd& x_d, const VectorXd& v_d,
                                           const JointVelocityOptions& opts = {});
JointVelocitySolution solve_joint_velocity(const JointDynamics& d, const TaskGains& g, const MatrixXd& jacobian,
                                           const VectorXd& x, const VectorXd& x_d, const VectorXd& v_d,
                                           const JointVelocityOptions& opts = {});

/// Orthogonal projector Π₁ᵀ onto Ker(J₁ B_a^{-1}) built from the SVD kernel
/// basis (singular values <= 1e-10 count as zero).
MatrixXd null_space_projection(const MatrixXd& j1, const JointDynamics& d);

/// Γ_int = -α Π₁ᵀ ∂U/∂q. Throws InvalidInput for α < 0.
VectorXd internal_potential_torque(const MatrixXd& projection, const VectorXd& grad_u, double alpha);

/// Speed at an external port when internal torques are added:
/// V₁ = J₁ B_a^{-1} (J₁ᵀ W₁ + Γ_int).
VectorXd external_port_velocity(const MatrixXd& j1, const JointDynamics& d, const VectorXd& w1,
                                const VectorXd& internal_torque);

/// Cumulative ∫ Wᵀ V dt per port, trapezoidal in the power samples.
class EnergyLedger
{
public:
  explicit EnergyLedger(std::size_t ports = 1);

  void record(std::size_t port, const VectorXd& wrench, const VectorXd& velocity, double dt);

  [[nodiscard]] double energy(std::size_t port) const;
  [[nodiscard]] double total() const;
  [[nodiscard]] std::size_t ports() const { return accounts_.size(); }
  [[nodiscard]] std::size_t steps() const { return steps_; }

  /// Concatenates a later run: energies add, step counts add.
  EnergyLedger& operator+=(const EnergyLedger& later);

private:
  struct Account
  {
    double energy = 0.0;
    double last_power = 0.0;
    bool has_sample = false;
  };
  std::vector<Account> accounts_;
  std::size_t steps_ = 0;
};

/// Functional form of EnergyLedger::record.
EnergyLedger port_energy(EnergyLedger ledger, std::size_t port, const VectorXd& wrench, const VectorXd& velocity,
                         double dt);

/// Halves α whenever the watched port's cumulative energy drops below `bound`.
class AlphaMonitor
{
public:
  AlphaMonitor(double alpha, double bound, std::size_t port = 0);

  /// Returns the (possibly reduced) α to use for the next step.
  double update(const EnergyLedger& ledger);
  [[nodiscard]] double alpha() const { return alpha_; }
  [[nodiscard]] std::size_t reductions() const { return reductions_; }

private:
  double alpha_;
  double bound_;
  std::size_t port_;
  std::size_t reductions_ = 0;
};

struct CounterexampleCertificate
{
  double j2t_w2_norm = 0.0;       // must be > 0
  double balance_residual = 0.0;  // ‖J₁ᵀW₁ + ½J₂ᵀW₂‖
  double coupling_residual = 0.0; // ‖J₂ B_a^{-1} Π₁ᵀ J₂ᵀ‖
  double s = 0.0;                 // J₁ B_a^{-1} J₁ᵀ (scalar task)
  double power = 0.0;             // W₁ᵀV₁ + W₂ᵀV₂ under prioritized coupling

  [[nodiscard]] bool holds(double tol = 1e-10) const;
};

struct PassivityCounterexample
{
  VectorXd w1;
  VectorXd w2;
  MatrixXd j2;
  MatrixXd projection;  // Π₁ᵀ
  CounterexampleCertificate certificate;
};

/// Deterministic instance of two ports for which the prioritized torque
/// Γ = J₁ᵀW₁ + Π₁ᵀ J₂ᵀW₂ drains energy: J₂ = J₁, W₁ = -W₂/2. `w2`
/// defaults to a vector of ones. Throws InvalidInput when J₁ = 0.
PassivityCounterexample build_passivity_counterexample(const MatrixXd& j1, const JointDynamics& d,
                                                       std::optional<VectorXd> w2 = std::nullopt);

/// Torque from the two-port prioritized coupling.
VectorXd prioritized_torque(const PassivityCounterexample& ce, const MatrixXd& j1);

}  // namespace dmu
