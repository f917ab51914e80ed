// dmuplan: headless runs, console serving, scenario linting and replay
// track inspection.

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

#include "CLI11.hpp"
#include "console_server.hpp"
#include "dmu/headless.hpp"
#include "dmu/replay.hpp"
#include "dmu/tick_log.hpp"

namespace
{

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

dmu::Scenario load(const std::string& path, std::optional<std::uint64_t> seed)
{
  dmu::Scenario s = dmu::load_scenario(path);
  if (seed)
  {
    s.seed = *seed;
    s.drill.seed = *seed;
  }
  return s;
}

int run(const std::string& path, const std::string& ticklog, const std::string& summary,
        std::optional<std::uint64_t> ticks, std::optional<std::uint64_t> seed)
{
  const dmu::Scenario s = load(path, seed);
  std::ofstream log_file;
  dmu::HeadlessOptions opts;
  opts.tick_limit = ticks;
  if (!ticklog.empty())
  {
    log_file.open(ticklog, std::ios::binary);
    if (!log_file)
    {
      std::cerr << "cannot write " << ticklog << '\n';
      return 2;
    }
    opts.ticklog = &log_file;
  }
  const dmu::HeadlessResult r = dmu::run_headless(s, opts);
  if (summary.empty() || summary == "-")
  {
    dmu::write_summary(std::cout, r.summary);
  }
  else
  {
    std::ofstream out(summary);
    dmu::write_summary(out, r.summary);
  }
  if (r.summary.failed)
  {
    std::cerr << "run failed at tick " << r.summary.failed_at << ": " << r.summary.cause << '\n';
    return 1;
  }
  return 0;
}

int validate(const std::string& path)
{
  const dmu::Scenario s = dmu::load_scenario(path);
  std::cout << path << ": ok (" << dmu::to_string(s.kind) << ", " << s.agents.size() << " agents, " << s.ticks
            << " ticks)\n";
  return 0;
}

int replay_check(const std::string& path, const std::vector<double>& at)
{
  const dmu::ReplayTrack t = dmu::load_replay(path);
  std::cout << "samples," << t.samples() << '\n'
            << "points," << t.points() << '\n'
            << "start," << dmu::format_double(t.start()) << '\n'
            << "end," << dmu::format_double(t.end()) << '\n';
  for (double time : at)
  {
    const auto frames = dmu::replay_trajectory(t, time);
    for (std::size_t i = 0; i < frames.size(); ++i)
    {
      const auto& f = frames[i];
      std::cout << "at," << dmu::format_double(time) << ',' << t.point_names()[i];
      for (double v : {f.position.x(), f.position.y(), f.position.z(), f.orientation.w(), f.orientation.x(),
                       f.orientation.y(), f.orientation.z()})
      {
        std::cout << ',' << dmu::format_double(v);
      }
      std::cout << '\n';
    }
  }
  return 0;
}

int serve(const std::string& path, const std::string& bind, std::uint16_t port, double rate,
          std::optional<std::uint64_t> ticks, const std::string& ticklog)
{
  const dmu::Scenario s = dmu::load_scenario(path);
  std::ofstream log_file;
  dmu::console::ServerOptions opts;
  opts.address = bind;
  opts.port = port;
  opts.tick_rate = rate;
  opts.tick_limit = ticks;
  if (!ticklog.empty())
  {
    log_file.open(ticklog, std::ios::binary);
    opts.ticklog = &log_file;
  }
  dmu::console::Server server(s, opts);
  server.start();
  std::cerr << "serving " << s.name << " on ws://" << bind << ':' << server.port() << " at " << rate << " Hz\n";
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::thread watcher([&server] {
    while (!g_interrupted)
    {
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    server.stop();
  });
  server.wait();
  g_interrupted = true;
  watcher.join();
  return 0;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"dmuplan: blackboard planner and avatar control harness"};
  app.require_subcommand(1);

  std::string scenario;
  std::string ticklog;
  std::string summary;
  std::optional<std::uint64_t> ticks;
  std::optional<std::uint64_t> seed;

  auto* run_cmd = app.add_subcommand("run", "Run a scenario headless");
  run_cmd->add_option("scenario", scenario, "Scenario file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--ticklog", ticklog, "TickLog CSV output path");
  run_cmd->add_option("--summary", summary, "Summary CSV output path (default stdout)");
  run_cmd->add_option("--ticks", ticks, "Override the run length");
  run_cmd->add_option("--seed", seed, "Override the scenario seed");

  std::string bind = "127.0.0.1";
  std::uint16_t port = 8765;
  double rate = 100.0;
  auto* serve_cmd = app.add_subcommand("serve", "Serve a planner scenario to operator consoles");
  serve_cmd->add_option("scenario", scenario, "Scenario file")->required()->check(CLI::ExistingFile);
  serve_cmd->add_option("--bind", bind, "Bind address");
  serve_cmd->add_option("--port", port, "TCP port (0 picks one)");
  serve_cmd->add_option("--rate", rate, "Tick rate in Hz")->check(CLI::PositiveNumber);
  serve_cmd->add_option("--ticks", ticks, "Stop after this many ticks");
  serve_cmd->add_option("--ticklog", ticklog, "TickLog CSV output path");

  auto* validate_cmd = app.add_subcommand("validate", "Check a scenario file");
  validate_cmd->add_option("scenario", scenario, "Scenario file")->required()->check(CLI::ExistingFile);

  std::string track;
  std::vector<double> at;
  auto* replay_cmd = app.add_subcommand("replay-check", "Inspect a replay track");
  replay_cmd->add_option("track", track, "Replay file")->required()->check(CLI::ExistingFile);
  replay_cmd->add_option("--at", at, "Times to interpolate at");

  CLI11_PARSE(app, argc, argv);

  try
  {
    if (*run_cmd)
    {
      return run(scenario, ticklog, summary, ticks, seed);
    }
    if (*serve_cmd)
    {
      return serve(scenario, bind, port, rate, ticks, ticklog);
    }
    if (*validate_cmd)
    {
      return validate(scenario);
    }
    if (*replay_cmd)
    {
      return replay_check(track, at);
    }
  }
  catch (const std::exception& e)
  {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
