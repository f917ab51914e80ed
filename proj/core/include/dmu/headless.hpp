#pragma once

// Deterministic runs of a loaded scenario: the planner session used by both
// the headless harness and the console server, and run_headless with its
// metrics summary.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dmu/scenario.hpp"
#include "dmu/tick_log.hpp"

namespace dmu
{

/// A blackboard populated from a planner scenario plus its world. Scripted
/// operator inputs whose tick equals the tick about to run are queued just
/// before it runs.
class PlannerSession
{
public:
  explicit PlannerSession(const Scenario& s);

  /// Runs one tick and returns its log.
  TickLog step();

  [[nodiscard]] const WorldState& world() const { return world_; }
  [[nodiscard]] Blackboard& blackboard() { return board_; }
  [[nodiscard]] const Blackboard& blackboard() const { return board_; }
  [[nodiscard]] OperatorQueue& operator_queue() { return *queue_; }
  [[nodiscard]] std::vector<std::string> agent_names() const;
  [[nodiscard]] std::size_t robot_dof() const;

  /// Distance within tolerance, no collision and a clear sight line.
  [[nodiscard]] bool reached() const;

  /// Replaces the target; takes effect for the next tick.
  void set_target(const Target& t);

private:
  WorldState world_;
  Blackboard board_;
  std::shared_ptr<OperatorQueue> queue_;
  std::vector<ScriptedInput> script_;
  std::size_t next_script_ = 0;
  double reach_tolerance_;
};

struct RunSummary
{
  std::string scenario;
  std::string kind;
  bool failed = false;
  std::uint64_t failed_at = 0;
  std::string cause;
  bool reached = false;
  std::uint64_t ticks_run = 0;

  double final_distance = 0.0;
  double final_collision_length = 0.0;
  double final_st_occlusion = 0.0;
  double final_cone_occlusion = 0.0;
  double final_cone_aperture = 0.0;

  double energy_external = 0.0;
  double energy_internal = 0.0;
  double max_penetration = 0.0;
  double rms_guide_angle = 0.0;
  double guide_initial_energy = 0.0;
  double guide_delivered_energy = 0.0;
};

/// key,value rows in a fixed order.
void write_summary(std::ostream& out, const RunSummary& s);

struct HeadlessOptions
{
  std::optional<std::uint64_t> tick_limit;  // overrides the scenario length
  std::ostream* ticklog = nullptr;          // TickLog CSV destination
};

struct HeadlessResult
{
  WorldState world;  // final planner state (default for avatar runs)
  RunSummary summary;
};

/// Runs the scenario to completion. Numeric failures are caught and
/// reported in the summary with the tick they occurred at.
HeadlessResult run_headless(const Scenario& s, const HeadlessOptions& opts = {});

}  // namespace dmu
