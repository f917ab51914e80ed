#pragma once

// Scenario files: a JSON document describing either a planner run (scene,
// bodies, target, agent roster, scripted operator input) or one of the
// avatar experiments. The schema is in docs/scenario_format.md.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dmu/agents.hpp"
#include "dmu/avatar.hpp"
#include "dmu/blackboard.hpp"

namespace dmu
{

/// Parse or validation failure. `path()` names the offending field
/// (e.g. "agents[2].rate") or, for syntax errors, "line:column".
class ScenarioError : public InvalidInput
{
public:
  ScenarioError(std::string path, const std::string& message)
    : InvalidInput{path + ": " + message}, path_{std::move(path)}
  {
  }
  [[nodiscard]] const std::string& path() const { return path_; }

private:
  std::string path_;
};

enum class ScenarioKind
{
  kPlanner,
  kDrill,
  kHandOnTable,
  kPassivity,
};

std::string to_string(ScenarioKind k);

struct AgentSpec
{
  AgentDescriptor desc;
  AgentKind kind = AgentKind::kAttraction;
};

struct ScriptedInput
{
  std::uint64_t tick = 0;  // tick during which the input is available
  OperatorInput input;
};

struct Scenario
{
  int version = 1;
  std::string name;
  ScenarioKind kind = ScenarioKind::kPlanner;
  std::uint64_t ticks = 1000;  // planner ticks or simulation steps
  std::uint64_t seed = 1;

  // Planner
  WorldState world;
  std::vector<AgentSpec> agents;
  AgentParams params;
  std::vector<ScriptedInput> operator_script;
  bool stop_when_reached = false;
  double reach_tolerance = 0.05;

  // Avatar experiments
  DrillConfig drill;
  TableConfig table;
  PassivityConfig passivity;
  std::optional<std::string> replay_path;  // drill: recorded track instead of the seeded one
};

/// `base_dir` resolves relative file references (replay tracks).
Scenario parse_scenario(const std::string& text, const std::string& base_dir = ".");
Scenario load_scenario(const std::string& path);

}  // namespace dmu
