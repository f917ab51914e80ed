#pragma once

// TickLog CSV serialization. Column order (stable, see docs/ticklog.md):
//
//   tick, distance, collision_length, st_occlusion, cone_occlusion,
//   cone_aperture, lead_x, lead_y, lead_theta, head_alpha, head_beta,
//   head_theta,
//   per agent <A>: A.active, A.failed, A.dx, A.dy, A.dtheta, A.dalpha,
//                  A.dbeta, A.dtheta_b, A.dcone, A.dropped, A.dq0..A.dq{n-1},
//   q0..q{n-1},
//   time, energy_external, energy_internal, condition, contact_count,
//   max_penetration, impulse_norm, guide_angle, guide_energy, probe_height,
//   obstacle_height, regularized
//
// where n is the robot's joint count (0 without a robot). Agent columns hold
// the normalized contribution. Doubles use the shortest round-trip form.

#include <iosfwd>
#include <string>
#include <vector>

#include "dmu/blackboard.hpp"

namespace dmu
{

std::string format_double(double v);

class TickLogWriter
{
public:
  TickLogWriter(std::ostream& out, std::vector<std::string> agent_names, std::size_t robot_dof);

  [[nodiscard]] std::vector<std::string> header() const;
  void write(const TickLog& log);

private:
  std::ostream& out_;
  std::vector<std::string> agents_;
  std::size_t dof_;
};

}  // namespace dmu
