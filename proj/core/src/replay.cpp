#include "dmu/replay.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace dmu
{

using nlohmann::json;

ReplayTrack::ReplayTrack(std::vector<double> times, std::vector<std::vector<Frame>> frames,
                         std::vector<std::string> point_names)
  : times_{std::move(times)}, frames_{std::move(frames)}, names_{std::move(point_names)}
{
  if (times_.empty() || times_.size() != frames_.size())
  {
    throw InvalidInput("replay track needs one frame set per timestamp and at least one sample");
  }
  const std::size_t n = frames_.front().size();
  if (n == 0)
  {
    throw InvalidInput("replay samples need at least one control point");
  }
  for (std::size_t k = 0; k < times_.size(); ++k)
  {
    if (!std::isfinite(times_[k]))
    {
      throw InvalidInput("replay timestamps must be finite");
    }
    if (k > 0 && !(times_[k] > times_[k - 1]))
    {
      throw InvalidInput("replay timestamps must be strictly increasing (sample " + std::to_string(k) + ")");
    }
    if (frames_[k].size() != n)
    {
      throw InvalidInput("replay sample " + std::to_string(k) + " has a different point count");
    }
    for (auto& f : frames_[k])
    {
      if (!f.position.allFinite() || !f.orientation.coeffs().allFinite() || f.orientation.norm() == 0.0)
      {
        throw InvalidInput("replay sample " + std::to_string(k) + " has an invalid frame");
      }
      f.orientation.normalize();
    }
  }
  if (names_.empty())
  {
    for (std::size_t i = 0; i < n; ++i)
    {
      names_.push_back("p" + std::to_string(i));
    }
  }
  if (names_.size() != n)
  {
    throw InvalidInput("replay point names do not match the point count");
  }
}

namespace
{

Frame interpolate(const Frame& a, const Frame& b, double u)
{
  Frame f;
  f.position = a.position + u * (b.position - a.position);
  // Eigen's slerp already takes the shorter arc.
  f.orientation = a.orientation.slerp(u, b.orientation).normalized();
  return f;
}

}  // namespace

std::vector<Frame> replay_trajectory(const ReplayTrack& track, double t)
{
  const auto& ts = track.times();
  if (!(t > ts.front()))
  {
    return track.frames(0);
  }
  if (!(t < ts.back()))
  {
    return track.frames(ts.size() - 1);
  }
  const auto hi = static_cast<std::size_t>(std::upper_bound(ts.begin(), ts.end(), t) - ts.begin());
  const std::size_t lo = hi - 1;
  if (t == ts[lo])
  {
    return track.frames(lo);
  }
  const double u = (t - ts[lo]) / (ts[hi] - ts[lo]);
  std::vector<Frame> out;
  const auto& fa = track.frames(lo);
  const auto& fb = track.frames(hi);
  out.reserve(fa.size());
  for (std::size_t i = 0; i < fa.size(); ++i)
  {
    out.push_back(interpolate(fa[i], fb[i], u));
  }
  return out;
}

Frame replay_point(const ReplayTrack& track, double t, std::size_t point)
{
  if (point >= track.points())
  {
    throw InvalidInput("replay point index out of range");
  }
  return replay_trajectory(track, t)[point];
}

ReplayTrack parse_replay(const std::string& text)
{
  json j;
  try
  {
    j = json::parse(text);
  }
  catch (const json::parse_error& e)
  {
    throw InvalidInput(std::string("replay: parse error at byte ") + std::to_string(e.byte) + ": " + e.what());
  }
  try
  {
    if (j.at("version").get<int>() != 1)
    {
      throw InvalidInput("replay.version: unsupported version");
    }
    std::vector<std::string> names = j.value("points", std::vector<std::string>{});
    std::vector<double> times;
    std::vector<std::vector<Frame>> frames;
    for (const auto& s : j.at("samples"))
    {
      times.push_back(s.at("t").get<double>());
      std::vector<Frame> fs;
      for (const auto& f : s.at("frames"))
      {
        const auto p = f.at("position").get<std::vector<double>>();
        const auto q = f.value("orientation", std::vector<double>{1.0, 0.0, 0.0, 0.0});
        if (p.size() != 3 || q.size() != 4)
        {
          throw InvalidInput("replay.samples: position needs 3 and orientation 4 numbers");
        }
        fs.push_back({Vec3{p[0], p[1], p[2]}, Quaterniond{q[0], q[1], q[2], q[3]}});
      }
      frames.push_back(std::move(fs));
    }
    return ReplayTrack{std::move(times), std::move(frames), std::move(names)};
  }
  catch (const json::exception& e)
  {
    throw InvalidInput(std::string("replay: ") + e.what());
  }
}

ReplayTrack load_replay(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw InvalidInput("cannot open replay file " + path);
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_replay(ss.str());
}

void write_replay(std::ostream& out, const ReplayTrack& track)
{
  json j;
  j["version"] = 1;
  j["points"] = track.point_names();
  json samples = json::array();
  for (std::size_t k = 0; k < track.samples(); ++k)
  {
    json fs = json::array();
    for (const auto& f : track.frames(k))
    {
      const auto& q = f.orientation;
      fs.push_back({{"position", {f.position.x(), f.position.y(), f.position.z()}},
                    {"orientation", {q.w(), q.x(), q.y(), q.z()}}});
    }
    samples.push_back({{"t", track.times()[k]}, {"frames", fs}});
  }
  j["samples"] = samples;
  out << j.dump(1) << '\n';
}

}  // namespace dmu
