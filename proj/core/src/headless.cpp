#include "dmu/headless.hpp"

#include <ostream>

namespace dmu
{

PlannerSession::PlannerSession(const Scenario& s)
  : world_{s.world},
    queue_{std::make_shared<OperatorQueue>()},
    script_{s.operator_script},
    reach_tolerance_{s.reach_tolerance}
{
  if (s.kind != ScenarioKind::kPlanner)
  {
    throw InvalidInput("planner session needs a planner scenario");
  }
  for (const auto& a : s.agents)
  {
    board_.register_agent(a.desc, make_agent(a.kind, s.params, a.kind == AgentKind::kOperator ? queue_ : nullptr));
  }
  world_.refresh_cone();
}

TickLog PlannerSession::step()
{
  const std::uint64_t tick = world_.tick + 1;
  while (next_script_ < script_.size() && script_[next_script_].tick <= tick)
  {
    queue_->push(script_[next_script_].input);
    ++next_script_;
  }
  TickResult r = board_.run_tick(world_);
  world_ = std::move(r.world);
  return std::move(r.log);
}

std::vector<std::string> PlannerSession::agent_names() const
{
  std::vector<std::string> out;
  for (const auto& d : board_.roster())
  {
    out.push_back(d.name);
  }
  return out;
}

std::size_t PlannerSession::robot_dof() const { return world_.robot ? world_.robot->dof() : 0; }

bool PlannerSession::reached() const
{
  return distance_to_target(world_) <= reach_tolerance_ && collision_length(world_) == 0.0 &&
         st_occlusion(world_) == 0.0;
}

void PlannerSession::set_target(const Target& t)
{
  if (!(t.size > 0.0) || !t.position.allFinite())
  {
    throw InvalidInput("target needs a finite position and positive size");
  }
  world_.target = t;
  world_.refresh_cone();
}

void write_summary(std::ostream& out, const RunSummary& s)
{
  out << "key,value\n";
  out << "scenario," << s.scenario << '\n';
  out << "kind," << s.kind << '\n';
  out << "status," << (s.failed ? "failed" : "ok") << '\n';
  out << "failed_at," << s.failed_at << '\n';
  out << "cause," << s.cause << '\n';
  out << "reached," << (s.reached ? "reached" : "not reached") << '\n';
  out << "ticks_run," << s.ticks_run << '\n';
  const std::pair<const char*, double> rows[] = {
    {"final_distance", s.final_distance},
    {"final_collision_length", s.final_collision_length},
    {"final_st_occlusion", s.final_st_occlusion},
    {"final_cone_occlusion", s.final_cone_occlusion},
    {"final_cone_aperture", s.final_cone_aperture},
    {"energy_external", s.energy_external},
    {"energy_internal", s.energy_internal},
    {"max_penetration", s.max_penetration},
    {"rms_guide_angle", s.rms_guide_angle},
    {"guide_initial_energy", s.guide_initial_energy},
    {"guide_delivered_energy", s.guide_delivered_energy},
  };
  for (const auto& [k, v] : rows)
  {
    out << k << ',' << format_double(v) << '\n';
  }
}

namespace
{

void run_planner(const Scenario& s, std::uint64_t limit, std::ostream* log_out, HeadlessResult& res)
{
  PlannerSession session(s);
  std::optional<TickLogWriter> writer;
  if (log_out)
  {
    writer.emplace(*log_out, session.agent_names(), session.robot_dof());
  }
  RunSummary& sum = res.summary;
  try
  {
    for (std::uint64_t i = 0; i < limit; ++i)
    {
      if (s.stop_when_reached && session.reached())
      {
        break;
      }
      const TickLog log = session.step();
      ++sum.ticks_run;
      if (writer)
      {
        writer->write(log);
      }
    }
  }
  catch (const std::exception& e)
  {
    sum.failed = true;
    sum.failed_at = session.world().tick + 1;
    sum.cause = e.what();
  }
  res.world = session.world();
  const Criteria c = evaluate_criteria(res.world);
  sum.reached = session.reached();
  sum.final_distance = c.distance;
  sum.final_collision_length = c.collision_length;
  sum.final_st_occlusion = c.st_occlusion;
  sum.final_cone_occlusion = c.cone_occlusion;
  sum.final_cone_aperture = c.cone_aperture;
}

PhysicsSink make_sink(std::ostream* log_out, std::size_t dof, std::optional<TickLogWriter>& writer,
                      RunSummary& sum)
{
  if (log_out)
  {
    writer.emplace(*log_out, std::vector<std::string>{}, dof);
  }
  return [&writer, &sum](std::uint64_t step, const PhysicsSample& p, const VectorXd& q) {
    sum.ticks_run = step;
    if (writer)
    {
      TickLog log;
      log.tick = step;
      log.robot_q = q;
      log.physics = p;
      writer->write(log);
    }
  };
}

}  // namespace

HeadlessResult run_headless(const Scenario& s, const HeadlessOptions& opts)
{
  HeadlessResult res;
  RunSummary& sum = res.summary;
  sum.scenario = s.name;
  sum.kind = to_string(s.kind);
  const std::uint64_t limit = opts.tick_limit.value_or(s.ticks);

  if (s.kind == ScenarioKind::kPlanner)
  {
    run_planner(s, limit, opts.ticklog, res);
    return res;
  }

  std::optional<TickLogWriter> writer;
  try
  {
    switch (s.kind)
    {
      case ScenarioKind::kDrill:
      {
        DrillConfig cfg = s.drill;
        cfg.steps = limit;
        std::optional<ReplayTrack> track;
        if (s.replay_path)
        {
          track = load_replay(*s.replay_path);
        }
        const DrillResult r = run_drill(cfg, track, make_sink(opts.ticklog, 0, writer, sum));
        sum.rms_guide_angle = r.metrics.rms();
        sum.guide_initial_energy = r.initial_spring_energy;
        sum.guide_delivered_energy = r.delivered_energy;
        sum.energy_external = r.delivered_energy;
        break;
      }
      case ScenarioKind::kHandOnTable:
      {
        TableConfig cfg = s.table;
        cfg.steps = limit;
        const TableResult r = run_hand_on_table(cfg, make_sink(opts.ticklog, cfg.links.size(), writer, sum));
        sum.max_penetration = r.max_penetration;
        break;
      }
      case ScenarioKind::kPassivity:
      {
        PassivityConfig cfg = s.passivity;
        cfg.steps = limit;
        const PassivityResult r =
          run_passivity(cfg, make_sink(opts.ticklog, cfg.damping.size(), writer, sum));
        sum.energy_external = r.prioritized_energy;
        break;
      }
      case ScenarioKind::kPlanner:
        break;
    }
  }
  catch (const std::exception& e)
  {
    sum.failed = true;
    sum.failed_at = sum.ticks_run + 1;
    sum.cause = e.what();
  }
  return res;
}

}  // namespace dmu
