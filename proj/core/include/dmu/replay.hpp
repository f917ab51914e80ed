#pragma once

// Recorded target trajectories (the stand-in for a motion-capture stream):
// timestamped frames for one or more control points, replayed by
// interpolation.

#include <iosfwd>
#include <string>
#include <vector>

#include "dmu/guides.hpp"

namespace dmu
{

using Frame = ToolPose;

class ReplayTrack
{
public:
  /// `frames[k]` holds one frame per control point at `times[k]`. Throws
  /// InvalidInput when empty, when timestamps are not strictly increasing or
  /// when the per-sample point counts differ.
  ReplayTrack(std::vector<double> times, std::vector<std::vector<Frame>> frames,
              std::vector<std::string> point_names = {});

  [[nodiscard]] std::size_t samples() const { return times_.size(); }
  [[nodiscard]] std::size_t points() const { return names_.size(); }
  [[nodiscard]] const std::vector<std::string>& point_names() const { return names_; }
  [[nodiscard]] const std::vector<double>& times() const { return times_; }
  [[nodiscard]] const std::vector<Frame>& frames(std::size_t sample) const { return frames_.at(sample); }
  [[nodiscard]] double start() const { return times_.front(); }
  [[nodiscard]] double end() const { return times_.back(); }

private:
  std::vector<double> times_;
  std::vector<std::vector<Frame>> frames_;
  std::vector<std::string> names_;
};

/// Linear position and shortest-arc orientation interpolation between the
/// bracketing samples; clamped to the first/last sample outside the range.
std::vector<Frame> replay_trajectory(const ReplayTrack& track, double t);
Frame replay_point(const ReplayTrack& track, double t, std::size_t point = 0);

/// JSON form: {"version": 1, "points": [...], "samples": [{"t": ..,
/// "frames": [{"position": [x,y,z], "orientation": [w,x,y,z]}, ...]}]}.
ReplayTrack parse_replay(const std::string& text);
ReplayTrack load_replay(const std::string& path);
void write_replay(std::ostream& out, const ReplayTrack& track);

}  // namespace dmu
