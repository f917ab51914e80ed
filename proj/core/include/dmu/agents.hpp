#pragma once

// The elementary planning agents. Each step function is a pure function of
// the world snapshot (plus, for the operator, its own input queue) and
// returns a raw, un-normalized contribution.

#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "dmu/blackboard.hpp"

namespace dmu
{

struct AttractionParams
{
  /// No translation once the leading body is this close to the target (m).
  double stop_radius = 0.05;
};

struct RepulsionParams
{
  FiniteDiffSteps steps;
};

struct HeadOrientationParams
{
  double gain = 1.0;
  /// Gain of the comfort pull toward the neutral head yaw once on target.
  double neutral_gain = 0.5;
  /// Angular error (rad) under which the target counts as on the vision axis.
  double on_axis_tolerance = 1e-3;
};

struct VisibilityParams
{
  double aperture_step = deg2rad(1.0);
  std::size_t n_rays = 16;
  FiniteDiffSteps steps;
};

Contribution attraction_step(const WorldState& w, const AttractionParams& p = {});
Contribution repulsion_step(const WorldState& w, const RepulsionParams& p = {});
Contribution head_orientation_step(const WorldState& w, const HeadOrientationParams& p = {});
Contribution visibility_step(const WorldState& w, const VisibilityParams& p = {});

/// Angle between the vision axis y_s and the eye-to-target direction u.
double gaze_error(const WorldState& w);

struct OperatorInput
{
  Vec2 d_pos = Vec2::Zero();
  double d_theta = 0.0;
  double timestamp = 0.0;
};

/// Ordered, thread-safe input channel for the operator agent. Enqueue never
/// blocks on the scheduler.
class OperatorQueue
{
public:
  /// Throws InvalidInput on non-finite components.
  void push(const OperatorInput& in);

  struct Drained
  {
    std::optional<OperatorInput> latest;
    std::uint32_t dropped = 0;
  };

  /// Removes everything queued; only the newest input is kept.
  Drained drain();

  [[nodiscard]] std::size_t pending() const;

private:
  mutable std::mutex mutex_;
  std::deque<OperatorInput> queue_;
};

/// Latest-wins passthrough of the queued operator input to the leading body.
Contribution operator_step(const WorldState& w, OperatorQueue& queue, AgentContext& ctx);

enum class AgentKind
{
  kAttraction,
  kRepulsion,
  kHeadOrientation,
  kVisibility,
  kOperator,
};

std::optional<AgentKind> agent_kind_from_string(const std::string& s);
std::string to_string(AgentKind k);

struct AgentParams
{
  AttractionParams attraction;
  RepulsionParams repulsion;
  HeadOrientationParams head;
  VisibilityParams visibility;
};

/// Step function for `kind`. The operator kind requires `queue`.
AgentStepFn make_agent(AgentKind kind, const AgentParams& params = {},
                       std::shared_ptr<OperatorQueue> queue = nullptr);

}  // namespace dmu
