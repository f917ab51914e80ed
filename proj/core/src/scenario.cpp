#include "dmu/scenario.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace dmu
{

using nlohmann::json;

std::string to_string(ScenarioKind k)
{
  switch (k)
  {
    case ScenarioKind::kPlanner:
      return "planner";
    case ScenarioKind::kDrill:
      return "drill";
    case ScenarioKind::kHandOnTable:
      return "hand_on_table";
    case ScenarioKind::kPassivity:
      return "passivity";
  }
  return "?";
}

namespace
{

std::string join(const std::string& path, const std::string& key)
{
  return path.empty() ? key : path + "." + key;
}

std::string index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

const json& required(const json& j, const std::string& path, const std::string& key)
{
  if (!j.is_object())
  {
    throw ScenarioError(path.empty() ? "<root>" : path, "expected an object");
  }
  const auto it = j.find(key);
  if (it == j.end())
  {
    throw ScenarioError(join(path, key), "required field missing");
  }
  return *it;
}

const json* optional_field(const json& j, const std::string& key)
{
  const auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

double number(const json& v, const std::string& path)
{
  if (!v.is_number())
  {
    throw ScenarioError(path, "expected a number");
  }
  const double d = v.get<double>();
  if (!std::isfinite(d))
  {
    throw ScenarioError(path, "must be finite");
  }
  return d;
}

double number_or(const json& j, const std::string& path, const std::string& key, double fallback)
{
  const json* v = optional_field(j, key);
  return v ? number(*v, join(path, key)) : fallback;
}

double angle_or(const json& j, const std::string& path, const std::string& key, double fallback_rad)
{
  return deg2rad(number_or(j, path, key, rad2deg(fallback_rad)));
}

std::uint64_t count(const json& v, const std::string& path)
{
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
  {
    throw ScenarioError(path, "expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::uint64_t count_or(const json& j, const std::string& path, const std::string& key, std::uint64_t fallback)
{
  const json* v = optional_field(j, key);
  return v ? count(*v, join(path, key)) : fallback;
}

bool flag_or(const json& j, const std::string& path, const std::string& key, bool fallback)
{
  const json* v = optional_field(j, key);
  if (!v)
  {
    return fallback;
  }
  if (!v->is_boolean())
  {
    throw ScenarioError(join(path, key), "expected true or false");
  }
  return v->get<bool>();
}

std::string text(const json& v, const std::string& path)
{
  if (!v.is_string())
  {
    throw ScenarioError(path, "expected a string");
  }
  return v.get<std::string>();
}

std::vector<double> numbers(const json& v, const std::string& path, std::size_t n = 0)
{
  if (!v.is_array() || (n && v.size() != n))
  {
    throw ScenarioError(path, n ? "expected an array of " + std::to_string(n) + " numbers" : "expected an array");
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i)
  {
    out.push_back(number(v[i], index(path, i)));
  }
  return out;
}

Vec2 vec2(const json& v, const std::string& path)
{
  const auto a = numbers(v, path, 2);
  return {a[0], a[1]};
}

Vec3 vec3(const json& v, const std::string& path)
{
  const auto a = numbers(v, path, 3);
  return {a[0], a[1], a[2]};
}

JointLimit limit_deg(const json& v, const std::string& path)
{
  const auto a = numbers(v, path, 2);
  if (!(a[0] < a[1]))
  {
    throw ScenarioError(path, "lower bound must be below upper bound");
  }
  return {deg2rad(a[0]), deg2rad(a[1])};
}

Polygon2 polygon(const json& v, const std::string& path)
{
  if (!v.is_array())
  {
    throw ScenarioError(path, "expected an array of [x, y] points");
  }
  std::vector<Vec2> pts;
  for (std::size_t i = 0; i < v.size(); ++i)
  {
    pts.push_back(vec2(v[i], index(path, i)));
  }
  try
  {
    return Polygon2{std::move(pts)};
  }
  catch (const InvalidInput& e)
  {
    throw ScenarioError(path, e.what());
  }
}

PlanarPose pose(const json& v, const std::string& path)
{
  return {number_or(v, path, "x", 0.0), number_or(v, path, "y", 0.0), angle_or(v, path, "theta_deg", 0.0)};
}

Box3 box(const json& v, const std::string& path)
{
  try
  {
    if (optional_field(v, "lo"))
    {
      return Box3::from_bounds(vec3(required(v, path, "lo"), join(path, "lo")),
                               vec3(required(v, path, "hi"), join(path, "hi")));
    }
    return Box3{vec3(required(v, path, "center"), join(path, "center")),
                vec3(required(v, path, "half_extents"), join(path, "half_extents")), angle_or(v, path, "yaw_deg", 0.0)};
  }
  catch (const ScenarioError&)
  {
    throw;
  }
  catch (const InvalidInput& e)
  {
    throw ScenarioError(path, e.what());
  }
}

ManikinModel manikin(const json& v, const std::string& path)
{
  ManikinModel m;
  if (const json* t = optional_field(v, "trunk"))
  {
    m.trunk = pose(*t, join(path, "trunk"));
  }
  m.trunk_height = number_or(v, path, "trunk_height", m.trunk_height);
  if (const json* e = optional_field(v, "eye_offset"))
  {
    m.eye_offset = vec3(*e, join(path, "eye_offset"));
  }
  if (const json* h = optional_field(v, "head"))
  {
    const std::string hp = join(path, "head");
    m.head = {angle_or(*h, hp, "alpha_deg", 0.0), angle_or(*h, hp, "beta_deg", 0.0), angle_or(*h, hp, "theta_deg", 0.0)};
  }
  if (const json* l = optional_field(v, "limits"))
  {
    const std::string lp = join(path, "limits");
    if (const json* a = optional_field(*l, "alpha_deg"))
    {
      m.limits.alpha = limit_deg(*a, join(lp, "alpha_deg"));
    }
    if (const json* b = optional_field(*l, "beta_deg"))
    {
      m.limits.beta = limit_deg(*b, join(lp, "beta_deg"));
    }
    if (const json* t = optional_field(*l, "theta_deg"))
    {
      m.limits.theta = limit_deg(*t, join(lp, "theta_deg"));
    }
  }
  if (const json* f = optional_field(v, "footprint"))
  {
    m.footprint = polygon(*f, join(path, "footprint"));
  }
  try
  {
    m.validate();
  }
  catch (const InvalidInput& e)
  {
    throw ScenarioError(path, e.what());
  }
  return m;
}

RobotModel robot(const json& v, const std::string& path)
{
  RobotModel r;
  if (const json* b = optional_field(v, "base"))
  {
    r.base = pose(*b, join(path, "base"));
  }
  r.link_lengths = numbers(required(v, path, "links"), join(path, "links"));
  const std::size_t n = r.link_lengths.size();
  r.q = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  if (const json* q = optional_field(v, "q_deg"))
  {
    const auto a = numbers(*q, join(path, "q_deg"), n);
    for (std::size_t i = 0; i < n; ++i)
    {
      r.q[static_cast<Eigen::Index>(i)] = deg2rad(a[i]);
    }
  }
  r.limits.assign(n, JointLimit{});
  if (const json* l = optional_field(v, "limits_deg"))
  {
    const std::string lp = join(path, "limits_deg");
    if (!l->is_array() || l->size() != n)
    {
      throw ScenarioError(lp, "expected one [lo, hi] pair per link");
    }
    for (std::size_t i = 0; i < n; ++i)
    {
      r.limits[i] = limit_deg((*l)[i], index(lp, i));
    }
  }
  if (const json* a = optional_field(v, "aspect"))
  {
    const std::string s = text(*a, join(path, "aspect"));
    if (s != "positive" && s != "negative")
    {
      throw ScenarioError(join(path, "aspect"), "expected \"positive\" or \"negative\"");
    }
    r.aspect = s == "positive" ? Aspect::kPositive : Aspect::kNegative;
  }
  else
  {
    r.aspect = aspect_of(r.q, Aspect::kPositive);
  }
  if (const json* f = optional_field(v, "footprint"))
  {
    r.footprint = polygon(*f, join(path, "footprint"));
  }
  r.link_width = number_or(v, path, "link_width", r.link_width);
  try
  {
    r.validate();
  }
  catch (const InvalidInput& e)
  {
    throw ScenarioError(path, e.what());
  }
  return r;
}

void parse_planner(const json& j, Scenario& s)
{
  WorldState& w = s.world;
  if (const json* m = optional_field(j, "manikin"))
  {
    w.manikin = manikin(*m, "manikin");
  }
  if (const json* r = optional_field(j, "robot"))
  {
    w.robot = robot(*r, "robot");
  }
  if (const json* sub = optional_field(j, "subject"))
  {
    const std::string v = text(*sub, "subject");
    if (v != "manikin" && v != "robot")
    {
      throw ScenarioError("subject", "expected \"manikin\" or \"robot\"");
    }
    w.subject = v == "robot" ? Subject::kRobot : Subject::kManikin;
    if (w.subject == Subject::kRobot && !w.robot)
    {
      throw ScenarioError("robot", "required when subject is \"robot\"");
    }
  }

  const json& t = required(j, "", "target");
  w.target.position = vec3(required(t, "target", "position"), "target.position");
  w.target.size = number_or(t, "target", "size", w.target.size);
  if (!(w.target.size > 0.0))
  {
    throw ScenarioError("target.size", "must be positive");
  }

  if (const json* c = optional_field(j, "cone"))
  {
    w.cone_limits.min_aperture = angle_or(*c, "cone", "min_deg", w.cone_limits.min_aperture);
    w.cone_limits.max_aperture = angle_or(*c, "cone", "max_deg", w.cone_limits.max_aperture);
    w.cone.aperture = angle_or(*c, "cone", "aperture_deg", w.cone_limits.min_aperture);
    if (!(w.cone_limits.min_aperture > 0.0) || w.cone_limits.max_aperture < w.cone_limits.min_aperture ||
        !(w.cone_limits.max_aperture < kPi / 2))
    {
      throw ScenarioError("cone", "need 0 < min_deg <= max_deg < 90");
    }
  }
  else
  {
    w.cone.aperture = w.cone_limits.min_aperture;
  }

  if (const json* sc = optional_field(j, "scene"))
  {
    if (const json* ps = optional_field(*sc, "polygons"))
    {
      for (std::size_t i = 0; i < ps->size(); ++i)
      {
        w.scene.polygons.push_back(polygon((*ps)[i], index("scene.polygons", i)));
      }
    }
    if (const json* bs = optional_field(*sc, "boxes"))
    {
      for (std::size_t i = 0; i < bs->size(); ++i)
      {
        w.scene.boxes.push_back(box((*bs)[i], index("scene.boxes", i)));
      }
    }
  }

  const json& agents = required(j, "", "agents");
  if (!agents.is_array())
  {
    throw ScenarioError("agents", "expected an array");
  }
  std::set<std::string> names;
  for (std::size_t i = 0; i < agents.size(); ++i)
  {
    const std::string ap = index("agents", i);
    const json& a = agents[i];
    AgentSpec spec;
    spec.desc.name = text(required(a, ap, "name"), join(ap, "name"));
    const std::string kind = text(required(a, ap, "kind"), join(ap, "kind"));
    const auto k = agent_kind_from_string(kind);
    if (!k)
    {
      throw ScenarioError(join(ap, "kind"), "unknown agent kind \"" + kind + "\"");
    }
    spec.kind = *k;
    const json& rate = required(a, ap, "rate");
    if (!rate.is_number_integer() || rate.get<std::int64_t>() < 1)
    {
      throw ScenarioError(join(ap, "rate"), "agent \"" + spec.desc.name + "\": rate must be an integer >= 1");
    }
    spec.desc.rate = rate.get<std::uint32_t>();
    spec.desc.enabled = flag_or(a, ap, "enabled", true);
    spec.desc.delta_pos = number_or(a, ap, "delta_pos", spec.desc.delta_pos);
    spec.desc.delta_or = angle_or(a, ap, "delta_or_deg", spec.desc.delta_or);
    if (!(spec.desc.delta_pos > 0.0))
    {
      throw ScenarioError(join(ap, "delta_pos"), "agent \"" + spec.desc.name + "\": must be positive");
    }
    if (!(spec.desc.delta_or > 0.0))
    {
      throw ScenarioError(join(ap, "delta_or_deg"), "agent \"" + spec.desc.name + "\": must be positive");
    }
    if (!names.insert(spec.desc.name).second)
    {
      throw ScenarioError(join(ap, "name"), "duplicate agent name \"" + spec.desc.name + "\"");
    }
    s.agents.push_back(std::move(spec));
  }

  if (const json* p = optional_field(j, "params"))
  {
    if (const json* a = optional_field(*p, "attraction"))
    {
      s.params.attraction.stop_radius = number_or(*a, "params.attraction", "stop_radius", s.params.attraction.stop_radius);
    }
    if (const json* h = optional_field(*p, "head"))
    {
      s.params.head.gain = number_or(*h, "params.head", "gain", s.params.head.gain);
      s.params.head.neutral_gain = number_or(*h, "params.head", "neutral_gain", s.params.head.neutral_gain);
      s.params.head.on_axis_tolerance =
        angle_or(*h, "params.head", "on_axis_tolerance_deg", s.params.head.on_axis_tolerance);
    }
    if (const json* v = optional_field(*p, "visibility"))
    {
      s.params.visibility.aperture_step =
        angle_or(*v, "params.visibility", "aperture_step_deg", s.params.visibility.aperture_step);
      s.params.visibility.n_rays = count_or(*v, "params.visibility", "n_rays", s.params.visibility.n_rays);
      if (s.params.visibility.n_rays == 0)
      {
        throw ScenarioError("params.visibility.n_rays", "must be >= 1");
      }
    }
  }

  if (const json* script = optional_field(j, "operator_script"))
  {
    for (std::size_t i = 0; i < script->size(); ++i)
    {
      const std::string ip = index("operator_script", i);
      const json& e = (*script)[i];
      ScriptedInput in;
      in.tick = count(required(e, ip, "tick"), join(ip, "tick"));
      if (const json* d = optional_field(e, "d_pos"))
      {
        in.input.d_pos = vec2(*d, join(ip, "d_pos"));
      }
      in.input.d_theta = angle_or(e, ip, "d_theta_deg", 0.0);
      in.input.timestamp = number_or(e, ip, "timestamp", static_cast<double>(in.tick));
      if (!s.operator_script.empty() && in.tick < s.operator_script.back().tick)
      {
        throw ScenarioError(join(ip, "tick"), "script entries must be in tick order");
      }
      s.operator_script.push_back(in);
    }
  }

  s.stop_when_reached = flag_or(j, "", "stop_when_reached", s.stop_when_reached);
  s.reach_tolerance = number_or(j, "", "reach_tolerance", s.reach_tolerance);
  w.refresh_cone();
  try
  {
    w.validate();
  }
  catch (const InvalidInput& e)
  {
    throw ScenarioError("<world>", e.what());
  }
}

VirtualMechanism mechanism(const json& v, const std::string& path, VirtualMechanism m)
{
  m.stiffness = number_or(v, path, "stiffness", m.stiffness);
  m.rot_stiffness = number_or(v, path, "rot_stiffness", m.rot_stiffness);
  m.damping = number_or(v, path, "damping", m.damping);
  m.rot_damping = number_or(v, path, "rot_damping", m.rot_damping);
  m.mechanism_damping = number_or(v, path, "mechanism_damping", m.mechanism_damping);
  try
  {
    m.validate();
  }
  catch (const InvalidInput& e)
  {
    throw ScenarioError(path, e.what());
  }
  return m;
}

void positive(double v, const std::string& path)
{
  if (!(v > 0.0))
  {
    throw ScenarioError(path, "must be positive");
  }
}

void parse_drill(const json& j, Scenario& s, const std::string& base_dir)
{
  DrillConfig& c = s.drill;
  c.steps = s.ticks;
  c.seed = s.seed;
  if (const json* d = optional_field(j, "drill"))
  {
    const std::string p = "drill";
    c.dt = number_or(*d, p, "dt", c.dt);
    if (const json* h = optional_field(*d, "hole"))
    {
      c.hole = vec3(*h, join(p, "hole"));
    }
    if (const json* a = optional_field(*d, "axis"))
    {
      const Vec3 ax = vec3(*a, join(p, "axis"));
      if (ax.norm() == 0.0)
      {
        throw ScenarioError(join(p, "axis"), "must be non-zero");
      }
      c.axis = ax.normalized();
    }
    c.standoff = number_or(*d, p, "standoff", c.standoff);
    c.depth = number_or(*d, p, "depth", c.depth);
    c.noise_angle = angle_or(*d, p, "noise_angle_deg", c.noise_angle);
    c.noise_position = number_or(*d, p, "noise_position", c.noise_position);
    c.noise_min_hz = number_or(*d, p, "noise_min_hz", c.noise_min_hz);
    c.noise_max_hz = number_or(*d, p, "noise_max_hz", c.noise_max_hz);
    c.noise_terms = static_cast<int>(count_or(*d, p, "noise_terms", static_cast<std::uint64_t>(c.noise_terms)));
    c.sample_rate = number_or(*d, p, "sample_rate", c.sample_rate);
    c.tool_damping = number_or(*d, p, "tool_damping", c.tool_damping);
    c.tool_rot_damping = number_or(*d, p, "tool_rot_damping", c.tool_rot_damping);
    c.hand_stiffness = number_or(*d, p, "hand_stiffness", c.hand_stiffness);
    c.hand_rot_stiffness = number_or(*d, p, "hand_rot_stiffness", c.hand_rot_stiffness);
    c.guided = flag_or(*d, p, "guided", c.guided);
    if (const json* g = optional_field(*d, "guide"))
    {
      c.guide = mechanism(*g, join(p, "guide"), c.guide);
    }
    for (const char* k : {"dt", "sample_rate", "tool_damping", "tool_rot_damping"})
    {
      positive(number_or(*d, p, k, 1.0), join(p, k));
    }
    if (c.noise_terms < 1)
    {
      throw ScenarioError(join(p, "noise_terms"), "must be >= 1");
    }
    if (!(c.noise_min_hz > 0.0) || c.noise_max_hz < c.noise_min_hz)
    {
      throw ScenarioError(join(p, "noise_min_hz"), "need 0 < noise_min_hz <= noise_max_hz");
    }
  }
  if (const json* r = optional_field(j, "replay"))
  {
    std::filesystem::path rp = text(*r, "replay");
    if (rp.is_relative())
    {
      rp = std::filesystem::path(base_dir) / rp;
    }
    s.replay_path = rp.string();
  }
}

void parse_table(const json& j, Scenario& s)
{
  TableConfig& c = s.table;
  c.steps = s.ticks;
  const json* t = optional_field(j, "table");
  if (!t)
  {
    return;
  }
  const std::string p = "table";
  c.dt = number_or(*t, p, "dt", c.dt);
  positive(c.dt, join(p, "dt"));
  if (const json* v = optional_field(*t, "shoulder"))
  {
    c.shoulder = vec2(*v, join(p, "shoulder"));
  }
  if (const json* v = optional_field(*t, "links"))
  {
    c.links = numbers(*v, join(p, "links"));
  }
  const std::size_t n = c.links.size();
  if (n == 0)
  {
    throw ScenarioError(join(p, "links"), "need at least one link");
  }
  if (const json* v = optional_field(*t, "damping"))
  {
    c.damping = numbers(*v, join(p, "damping"), n);
  }
  if (const json* v = optional_field(*t, "q0_deg"))
  {
    const auto a = numbers(*v, join(p, "q0_deg"), n);
    c.q0 = VectorXd(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
    {
      c.q0[static_cast<Eigen::Index>(i)] = deg2rad(a[i]);
    }
  }
  if (const json* v = optional_field(*t, "limits_deg"))
  {
    if (!v->is_array() || v->size() != n)
    {
      throw ScenarioError(join(p, "limits_deg"), "expected one [lo, hi] pair per link");
    }
    c.limits.clear();
    for (std::size_t i = 0; i < n; ++i)
    {
      c.limits.push_back(limit_deg((*v)[i], index(join(p, "limits_deg"), i)));
    }
  }
  c.stiffness = number_or(*t, p, "stiffness", c.stiffness);
  c.table_height = number_or(*t, p, "table_height", c.table_height);
  if (const json* v = optional_field(*t, "table_x"))
  {
    c.table_x = vec2(*v, join(p, "table_x"));
  }
  if (c.damping.size() != n || c.q0.size() != static_cast<Eigen::Index>(n) || c.limits.size() != n)
  {
    throw ScenarioError(p, "links, damping, q0_deg and limits_deg must have the same length");
  }
}

void parse_passivity(const json& j, Scenario& s)
{
  PassivityConfig& c = s.passivity;
  c.steps = s.ticks;
  const json* v = optional_field(j, "passivity");
  if (!v)
  {
    return;
  }
  const std::string p = "passivity";
  c.dt = number_or(*v, p, "dt", c.dt);
  positive(c.dt, join(p, "dt"));
  c.w2 = number_or(*v, p, "w2", c.w2);
  if (const json* d = optional_field(*v, "damping"))
  {
    c.damping = numbers(*d, join(p, "damping"));
  }
  if (const json* r = optional_field(*v, "j1"))
  {
    const auto row = numbers(*r, join(p, "j1"), c.damping.size());
    c.j1 = MatrixXd(1, static_cast<Eigen::Index>(row.size()));
    for (std::size_t i = 0; i < row.size(); ++i)
    {
      c.j1(0, static_cast<Eigen::Index>(i)) = row[i];
    }
  }
  if (c.j1.cols() != static_cast<Eigen::Index>(c.damping.size()))
  {
    throw ScenarioError(join(p, "j1"), "needs one entry per damping coefficient");
  }
}

std::string location(const std::string& text, std::size_t byte)
{
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i)
  {
    if (text[i] == '\n')
    {
      ++line;
      col = 1;
    }
    else
    {
      ++col;
    }
  }
  return std::to_string(line) + ":" + std::to_string(col);
}

}  // namespace

Scenario parse_scenario(const std::string& text_in, const std::string& base_dir)
{
  json j;
  try
  {
    j = json::parse(text_in);
  }
  catch (const json::parse_error& e)
  {
    throw ScenarioError(location(text_in, e.byte == 0 ? 0 : e.byte - 1), "parse error");
  }
  if (!j.is_object())
  {
    throw ScenarioError("<root>", "expected an object");
  }

  Scenario s;
  const json& ver = required(j, "", "version");
  if (!ver.is_number_integer() || ver.get<int>() != 1)
  {
    throw ScenarioError("version", "unsupported version (expected 1)");
  }
  s.name = text(required(j, "", "name"), "name");
  const std::string kind = text(required(j, "", "kind"), "kind");
  if (kind == "planner")
  {
    s.kind = ScenarioKind::kPlanner;
  }
  else if (kind == "drill")
  {
    s.kind = ScenarioKind::kDrill;
  }
  else if (kind == "hand_on_table")
  {
    s.kind = ScenarioKind::kHandOnTable;
  }
  else if (kind == "passivity")
  {
    s.kind = ScenarioKind::kPassivity;
  }
  else
  {
    throw ScenarioError("kind", "unknown scenario kind \"" + kind + "\"");
  }
  s.ticks = count(required(j, "", "ticks"), "ticks");
  s.seed = count_or(j, "", "seed", s.seed);

  switch (s.kind)
  {
    case ScenarioKind::kPlanner:
      parse_planner(j, s);
      break;
    case ScenarioKind::kDrill:
      parse_drill(j, s, base_dir);
      break;
    case ScenarioKind::kHandOnTable:
      parse_table(j, s);
      break;
    case ScenarioKind::kPassivity:
      parse_passivity(j, s);
      break;
  }
  return s;
}

Scenario load_scenario(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw InvalidInput("cannot open scenario file " + path);
  }
  std::stringstream ss;
  ss << in.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path();
  return parse_scenario(ss.str(), dir.empty() ? "." : dir.string());
}

}  // namespace dmu
