#include "dmu/tick_log.hpp"

#include <array>
#include <charconv>
#include <ostream>

namespace dmu
{

std::string format_double(double v)
{
  if (v == 0.0)
  {
    return "0";  // also folds -0
  }
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return {buf.data(), res.ptr};
}

TickLogWriter::TickLogWriter(std::ostream& out, std::vector<std::string> agent_names, std::size_t robot_dof)
  : out_{out}, agents_{std::move(agent_names)}, dof_{robot_dof}
{
  const auto cols = header();
  for (std::size_t i = 0; i < cols.size(); ++i)
  {
    out_ << (i ? "," : "") << cols[i];
  }
  out_ << '\n';
}

std::vector<std::string> TickLogWriter::header() const
{
  std::vector<std::string> h{"tick",   "distance", "collision_length", "st_occlusion", "cone_occlusion",
                             "cone_aperture", "lead_x", "lead_y", "lead_theta", "head_alpha",
                             "head_beta", "head_theta"};
  for (const auto& a : agents_)
  {
    for (const char* f : {"active", "failed", "dx", "dy", "dtheta", "dalpha", "dbeta", "dtheta_b", "dcone",
                          "dropped"})
    {
      h.push_back(a + "." + f);
    }
    for (std::size_t j = 0; j < dof_; ++j)
    {
      h.push_back(a + ".dq" + std::to_string(j));
    }
  }
  for (std::size_t j = 0; j < dof_; ++j)
  {
    h.push_back("q" + std::to_string(j));
  }
  for (const char* f : {"time", "energy_external", "energy_internal", "condition", "contact_count",
                        "max_penetration", "impulse_norm", "guide_angle", "guide_energy", "probe_height", "obstacle_height",
                        "regularized"})
  {
    h.emplace_back(f);
  }
  return h;
}

void TickLogWriter::write(const TickLog& log)
{
  std::string row = std::to_string(log.tick);
  auto put = [&row](double v) {
    row += ',';
    row += format_double(v);
  };
  auto put_int = [&row](auto v) {
    row += ',';
    row += std::to_string(v);
  };
  const Criteria& c = log.criteria;
  for (double v : {c.distance, c.collision_length, c.st_occlusion, c.cone_occlusion, c.cone_aperture,
                   log.leading.x, log.leading.y, log.leading.theta, log.head.alpha, log.head.beta, log.head.theta})
  {
    put(v);
  }
  for (std::size_t i = 0; i < agents_.size(); ++i)
  {
    const AgentTickEntry* e = i < log.agents.size() ? &log.agents[i] : nullptr;
    const Contribution n = e ? e->normalized : Contribution{};
    put_int(e && e->active ? 1 : 0);
    put_int(e && e->failed ? 1 : 0);
    for (double v : {n.d_trunk.x(), n.d_trunk.y(), n.d_trunk.z(), n.d_head.x(), n.d_head.y(), n.d_head.z(),
                     n.d_cone})
    {
      put(v);
    }
    put_int(e ? e->dropped_inputs : 0u);
    for (std::size_t j = 0; j < dof_; ++j)
    {
      const auto idx = static_cast<Eigen::Index>(j);
      put(idx < n.d_joints.size() ? n.d_joints[idx] : 0.0);
    }
  }
  for (std::size_t j = 0; j < dof_; ++j)
  {
    const auto idx = static_cast<Eigen::Index>(j);
    put(idx < log.robot_q.size() ? log.robot_q[idx] : 0.0);
  }
  const PhysicsSample& p = log.physics;
  for (double v : {p.time, p.energy_external, p.energy_internal, p.condition})
  {
    put(v);
  }
  put_int(p.contact_count);
  for (double v : {p.max_penetration, p.impulse_norm, p.guide_angle, p.guide_energy, p.probe_height,
                   p.obstacle_height})
  {
    put(v);
  }
  put_int(p.regularized ? 1 : 0);
  row += '\n';
  out_ << row;
}

}  // namespace dmu
