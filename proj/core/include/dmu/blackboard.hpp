#pragma once

// Blackboard scheduler: agents read the shared WorldState, post bounded
// contributions at their own activation period, and the master loop sums and
// applies them once per tick.

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dmu/world.hpp"

namespace dmu
{

struct AgentDescriptor
{
  std::string name;
  std::uint32_t rate = 1;  // activation period in ticks
  bool enabled = true;
  double delta_pos = 0.05;  // meters
  double delta_or = deg2rad(5.0);  // radians

  /// Throws InvalidInput when rate == 0 or a bound is not positive.
  void validate() const;
};

/// A move proposed by one agent for one tick.
struct Contribution
{
  Vec3 d_trunk = Vec3::Zero();  // (dx, dy, dtheta) of the leading body
  Vec3 d_head = Vec3::Zero();   // (dalpha, dbeta, dtheta_b)
  Eigen::VectorXd d_joints;     // robot joint deltas; empty when unused
  double d_cone = 0.0;          // aperture delta

  [[nodiscard]] bool is_zero() const;
  [[nodiscard]] bool all_finite() const;
  Contribution& operator+=(const Contribution& o);
};

/// Rescales the translation to norm <= delta_pos (direction kept) and clamps
/// every angular component to [-delta_or, delta_or]. Throws EvaluationFailure
/// on non-finite input and InvalidInput on non-positive bounds.
Contribution normalize_contribution(const Contribution& raw, double delta_pos, double delta_or);

/// Applies a summed contribution: moves the leading body, clamps head and
/// robot joints to limits, wraps angles, keeps the aperture in range and
/// refreshes the cone. Does not touch `tick`.
void apply_contribution(WorldState& w, const Contribution& sum);

struct Criteria
{
  double distance = 0.0;
  double collision_length = 0.0;
  double st_occlusion = 0.0;
  double cone_occlusion = 0.0;
  double cone_aperture = 0.0;
};

Criteria evaluate_criteria(const WorldState& w);

struct AgentTickEntry
{
  std::string name;
  bool active = false;  // fired this tick
  bool failed = false;  // fired but evaluation threw
  std::string error;
  Contribution raw;
  Contribution normalized;
  std::uint32_t dropped_inputs = 0;
};

/// Physics-side columns; filled by avatar runs, zero for planner runs.
struct PhysicsSample
{
  double time = 0.0;
  double energy_external = 0.0;
  double energy_internal = 0.0;
  double condition = 0.0;
  std::uint32_t contact_count = 0;
  double max_penetration = 0.0;
  double impulse_norm = 0.0;
  double guide_angle = 0.0;
  double guide_energy = 0.0;
  double probe_height = 0.0;     // tracked contact probe (e.g. the hand)
  double obstacle_height = 0.0;  // surface it must stay above
  bool regularized = false;
};

struct TickLog
{
  std::uint64_t tick = 0;
  std::vector<AgentTickEntry> agents;
  Contribution applied;
  Criteria criteria;
  PlanarPose leading;
  HeadAngles head;
  Eigen::VectorXd robot_q;
  PhysicsSample physics;
};

struct AgentHandle
{
  std::size_t index = 0;
  friend bool operator==(AgentHandle, AgentHandle) = default;
};

/// Per-call scratch an agent can report through (e.g. discarded inputs).
struct AgentContext
{
  std::uint32_t dropped_inputs = 0;
};

using AgentStepFn = std::function<Contribution(const WorldState&, AgentContext&)>;

/// Optional overrides applied at the next tick boundary.
struct AgentControl
{
  std::optional<bool> enabled;
  std::optional<std::uint32_t> rate;
  std::optional<double> delta_pos;
  std::optional<double> delta_or;
};

struct TickResult
{
  WorldState world;
  TickLog log;
};

class Blackboard
{
public:
  /// Throws InvalidInput on a duplicate name or invalid descriptor.
  AgentHandle register_agent(AgentDescriptor desc, AgentStepFn step);
  AgentHandle register_agent(AgentDescriptor desc, std::function<Contribution(const WorldState&)> step);

  /// Validates the whole request first; on rejection nothing changes.
  void set_agent_control(AgentHandle h, const AgentControl& ctl);

  [[nodiscard]] std::optional<AgentHandle> find(std::string_view name) const;
  [[nodiscard]] const AgentDescriptor& descriptor(AgentHandle h) const;
  [[nodiscard]] std::size_t size() const { return agents_.size(); }
  [[nodiscard]] std::vector<AgentDescriptor> roster() const;

  /// Runs tick number world.tick + 1: every enabled agent whose period divides
  /// that number is evaluated on the same snapshot, its output normalized,
  /// and the sum applied. Failing agents are skipped and logged.
  TickResult run_tick(const WorldState& world);

private:
  struct Slot
  {
    AgentDescriptor desc;
    AgentStepFn step;
  };
  std::vector<Slot> agents_;

  Slot& slot(AgentHandle h);
  const Slot& slot(AgentHandle h) const;
};

}  // namespace dmu
