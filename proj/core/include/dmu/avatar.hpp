#pragma once

// Avatar-side experiments driven by replayed targets: the guided drill, the
// hand leaning on a table, and the two-port prioritization run that loses
// passivity.

#include <cstdint>
#include <functional>
#include <optional>

#include "dmu/blackboard.hpp"
#include "dmu/constraints.hpp"
#include "dmu/dynamics.hpp"
#include "dmu/guides.hpp"
#include "dmu/replay.hpp"

namespace dmu
{

/// Receives one PhysicsSample per simulated step.
using PhysicsSink = std::function<void(std::uint64_t step, const PhysicsSample& sample, const VectorXd& q)>;

struct DrillConfig
{
  double dt = 1e-3;
  std::uint64_t steps = 5000;
  std::uint64_t seed = 1;

  Vec3 hole{0.0, 0.8, 1.2};
  Vec3 axis = Vec3::UnitY();  // drilling direction
  double standoff = 0.15;     // start distance from the wall
  double depth = 0.05;        // drilled depth at the end of the track

  // Hand tremor / capture noise on the replayed target: sum of sinusoids
  // with seeded frequencies and phases.
  double noise_angle = deg2rad(6.0);
  double noise_position = 0.01;
  double noise_min_hz = 0.1;
  double noise_max_hz = 0.5;
  int noise_terms = 4;
  double sample_rate = 100.0;

  // Tool body (first order) and the hand's pull toward the replayed frame.
  double tool_damping = 50.0;
  double tool_rot_damping = 0.5;
  double hand_stiffness = 200.0;
  double hand_rot_stiffness = 4.0;

  bool guided = true;
  VirtualMechanism guide;  // origin/axis/target_axis are set from hole and axis
};

/// Seeded noisy drilling track: one control point (the hand-held tool).
ReplayTrack make_drill_track(const DrillConfig& cfg);

struct DrillResult
{
  GuideMetrics metrics;
  double initial_spring_energy = 0.0;
  double delivered_energy = 0.0;  // sum of guide wrench · tool twist · dt
  double dissipated = 0.0;
  ToolPose final_tool;
};

/// Runs the drill experiment. With `track` empty the seeded track is used.
/// The guide wrench computed for step k acts on the tool during step k+1.
DrillResult run_drill(const DrillConfig& cfg, const std::optional<ReplayTrack>& track = std::nullopt,
                      const PhysicsSink& sink = {});

struct TableConfig
{
  double dt = 1e-3;
  std::uint64_t steps = 4000;

  Vec2 shoulder{0.0, 1.45};  // (x, z)
  std::vector<double> links{0.35, 0.35, 0.2};
  std::vector<double> damping{2.0, 1.5, 0.5};  // B_a diagonal
  std::vector<JointLimit> limits{{-2.5, 1.5}, {-2.6, 0.0}, {-1.5, 1.5}};
  VectorXd q0 = (VectorXd(3) << -0.3, -0.9, -0.2).finished();
  double stiffness = 200.0;  // task-space pull toward the replayed hand target

  double table_height = 0.75;
  Vec2 table_x{0.2, 1.5};

  ContactOptions contact;
  LcpOptions lcp;
};

/// Replayed hand target (x, 0, z): reach down past the table top, lean, lift.
ReplayTrack make_table_track(const TableConfig& cfg);

struct TableResult
{
  std::vector<VectorXd> q;  // one per step, after the step
  double max_penetration = 0.0;
  std::uint64_t contact_steps = 0;
  double max_lcp_residual = 0.0;
};

TableResult run_hand_on_table(const TableConfig& cfg, const PhysicsSink& sink = {});

/// Same arm and target with no contact handling at all.
std::vector<VectorXd> run_hand_unconstrained(const TableConfig& cfg);

struct PassivityConfig
{
  double dt = 1e-3;
  std::uint64_t steps = 10000;
  MatrixXd j1 = (MatrixXd(1, 3) << 1.0, 0.5, -0.25).finished();
  std::vector<double> damping{1.0, 2.0, 0.5};
  double w2 = 10.0;
};

struct PassivityResult
{
  CounterexampleCertificate certificate;
  double prioritized_energy = 0.0;      // both ports, projected coupling
  double min_unprojected_power = 0.0;   // external port, torque J1ᵀW1 only
  std::uint64_t steps = 0;
};

PassivityResult run_passivity(const PassivityConfig& cfg, const PhysicsSink& sink = {});

}  // namespace dmu
