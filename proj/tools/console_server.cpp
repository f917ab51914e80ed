#include "console_server.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <chrono>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <set>
#include <thread>

#include "json.hpp"

namespace dmu::console
{

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;
using nlohmann::json;

namespace
{

constexpr int kProtocolVersion = 1;

std::string error_frame(const json& id, const std::string& message)
{
  return json{{"type", "error"}, {"version", kProtocolVersion}, {"id", id}, {"message", message}}.dump();
}

json vec(const Eigen::VectorXd& v)
{
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i)
  {
    a.push_back(v[i]);
  }
  return a;
}

json vec3(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

// Thrown while decoding a command; becomes an error frame.
struct Rejected
{
  std::string message;
};

const json& field(const json& j, const char* key)
{
  const auto it = j.find(key);
  if (it == j.end())
  {
    throw Rejected{std::string("missing field \"") + key + "\""};
  }
  return *it;
}

double num(const json& j, const char* key)
{
  const json& v = field(j, key);
  if (!v.is_number())
  {
    throw Rejected{std::string("field \"") + key + "\" must be a number"};
  }
  return v.get<double>();
}

std::string str(const json& j, const char* key)
{
  const json& v = field(j, key);
  if (!v.is_string())
  {
    throw Rejected{std::string("field \"") + key + "\" must be a string"};
  }
  return v.get<std::string>();
}

}  // namespace

ConsoleCore::ConsoleCore(const Scenario& s, std::ostream* ticklog) : session_{s}
{
  if (ticklog)
  {
    writer_.emplace(*ticklog, session_.agent_names(), session_.robot_dof());
  }
}

std::string ConsoleCore::hello() const
{
  json agents = json::array();
  for (const auto& d : session_.blackboard().roster())
  {
    agents.push_back({{"name", d.name},
                      {"enabled", d.enabled},
                      {"rate", d.rate},
                      {"delta_pos", d.delta_pos},
                      {"delta_or", d.delta_or}});
  }
  return json{{"type", "hello"}, {"version", kProtocolVersion}, {"tick", session_.world().tick}, {"agents", agents}}
    .dump();
}

Reply ConsoleCore::handle(const std::string& frame)
{
  json msg;
  try
  {
    msg = json::parse(frame);
  }
  catch (const json::parse_error&)
  {
    return {error_frame(nullptr, "malformed frame: not valid JSON"), false};
  }
  const json id = msg.is_object() && msg.contains("id") ? msg["id"] : json(nullptr);
  try
  {
    if (!msg.is_object() || str(msg, "type") != "command")
    {
      throw Rejected{"expected an object with \"type\": \"command\""};
    }
    const std::string cmd = str(msg, "command");
    Blackboard& board = session_.blackboard();
    auto agent = [&]() {
      const std::string name = str(msg, "agent");
      const auto h = board.find(name);
      if (!h)
      {
        throw Rejected{"unknown agent \"" + name + "\""};
      }
      return *h;
    };

    if (cmd == "pause" || cmd == "work")
    {
      AgentControl c;
      c.enabled = cmd == "work";
      board.set_agent_control(agent(), c);
    }
    else if (cmd == "set-rate")
    {
      const json& r = field(msg, "rate");
      if (!r.is_number_integer() || r.get<std::int64_t>() < 1)
      {
        throw Rejected{"rate must be an integer >= 1"};
      }
      AgentControl c;
      c.rate = r.get<std::uint32_t>();
      board.set_agent_control(agent(), c);
    }
    else if (cmd == "set-delta")
    {
      AgentControl c;
      if (msg.contains("delta_pos"))
      {
        c.delta_pos = num(msg, "delta_pos");
      }
      if (msg.contains("delta_or_deg"))
      {
        c.delta_or = deg2rad(num(msg, "delta_or_deg"));
      }
      if (!c.delta_pos && !c.delta_or)
      {
        throw Rejected{"set-delta needs delta_pos or delta_or_deg"};
      }
      board.set_agent_control(agent(), c);
    }
    else if (cmd == "operator-input")
    {
      const json& d = field(msg, "d_pos");
      if (!d.is_array() || d.size() != 2 || !d[0].is_number() || !d[1].is_number())
      {
        throw Rejected{"d_pos must be [dx, dy]"};
      }
      OperatorInput in;
      in.d_pos = {d[0].get<double>(), d[1].get<double>()};
      in.d_theta = msg.contains("d_theta_deg") ? deg2rad(num(msg, "d_theta_deg")) : 0.0;
      in.timestamp = msg.contains("timestamp") ? num(msg, "timestamp") : 0.0;
      session_.operator_queue().push(in);
    }
    else if (cmd == "set-target")
    {
      const json& p = field(msg, "position");
      if (!p.is_array() || p.size() != 3 || !p[0].is_number() || !p[1].is_number() || !p[2].is_number())
      {
        throw Rejected{"position must be [x, y, z]"};
      }
      Target t;
      t.position = {p[0].get<double>(), p[1].get<double>(), p[2].get<double>()};
      t.size = msg.contains("size") ? num(msg, "size") : session_.world().target.size;
      session_.set_target(t);
    }
    else
    {
      throw Rejected{"unknown command \"" + cmd + "\""};
    }

    const json ack{{"type", "ack"},
                   {"version", kProtocolVersion},
                   {"id", id},
                   {"command", cmd},
                   {"effective_tick", session_.world().tick + 1}};
    return {ack.dump(), true};
  }
  catch (const Rejected& r)
  {
    return {error_frame(id, r.message), false};
  }
  catch (const InvalidInput& e)
  {
    return {error_frame(id, e.what()), false};
  }
}

std::string ConsoleCore::tick()
{
  const TickLog log = session_.step();
  if (writer_)
  {
    writer_->write(log);
  }
  const WorldState& w = session_.world();
  json agents = json::array();
  const auto roster = session_.blackboard().roster();
  for (std::size_t i = 0; i < roster.size(); ++i)
  {
    const auto& d = roster[i];
    const AgentTickEntry& e = log.agents.at(i);
    const Contribution& n = e.normalized;
    agents.push_back({{"name", d.name},
                      {"enabled", d.enabled},
                      {"rate", d.rate},
                      {"delta_pos", d.delta_pos},
                      {"delta_or", d.delta_or},
                      {"active", e.active},
                      {"failed", e.failed},
                      {"dropped", e.dropped_inputs},
                      {"d_trunk", vec3(n.d_trunk)},
                      {"d_head", vec3(n.d_head)},
                      {"d_cone", n.d_cone}});
  }
  const PlanarPose lead = w.leading_pose();
  json snap{{"type", "snapshot"},
            {"version", kProtocolVersion},
            {"tick", w.tick},
            {"lead", {{"x", lead.x}, {"y", lead.y}, {"theta", lead.theta}}},
            {"trunk", {{"x", w.manikin.trunk.x}, {"y", w.manikin.trunk.y}, {"theta", w.manikin.trunk.theta}}},
            {"head", {{"alpha", w.manikin.head.alpha}, {"beta", w.manikin.head.beta}, {"theta", w.manikin.head.theta}}},
            {"robot_q", w.robot ? vec(w.robot->q) : json::array()},
            {"cone",
             {{"vertex", vec3(w.cone.vertex)},
              {"axis", vec3(w.cone.axis)},
              {"aperture", w.cone.aperture},
              {"length", w.cone.length},
              {"min_aperture", w.cone_limits.min_aperture},
              {"max_aperture", w.effective_max_aperture()}}},
            {"target", {{"position", vec3(w.target.position)}, {"size", w.target.size}}},
            {"criteria",
             {{"distance", log.criteria.distance},
              {"collision_length", log.criteria.collision_length},
              {"st_occlusion", log.criteria.st_occlusion},
              {"cone_occlusion", log.criteria.cone_occlusion}}},
            {"energies", {{"external", log.physics.energy_external}, {"internal", log.physics.energy_internal}}},
            {"agents", agents}};
  return snap.dump();
}

// ---------------------------------------------------------------------------

namespace
{

class Session;

struct Hub
{
  std::set<std::shared_ptr<Session>> sessions;  // io thread only
};

class Session : public std::enable_shared_from_this<Session>
{
public:
  using Inbox = std::function<void(std::weak_ptr<Session>, std::string)>;

  Session(tcp::socket socket, Hub& hub, Inbox inbox, std::string hello)
    : ws_{std::move(socket)}, hub_{hub}, inbox_{std::move(inbox)}, hello_{std::move(hello)}
  {
  }

  void run()
  {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (ec)
      {
        return;
      }
      self->hub_.sessions.insert(self);
      self->send(self->hello_);
      self->read();
    });
  }

  // io thread only.
  void send(std::string frame)
  {
    if (outbox_.size() > 1024)
    {
      outbox_.pop_front();  // slow client: drop the oldest frame
    }
    outbox_.push_back(std::move(frame));
    if (!writing_)
    {
      write();
    }
  }

  void close()
  {
    beast::error_code ec;
    beast::get_lowest_layer(ws_).socket().close(ec);
  }

private:
  void read()
  {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec)
      {
        self->hub_.sessions.erase(self);
        return;
      }
      self->inbox_(self, beast::buffers_to_string(self->buffer_.data()));
      self->buffer_.consume(self->buffer_.size());
      self->read();
    });
  }

  void write()
  {
    writing_ = true;
    ws_.text(true);
    ws_.async_write(net::buffer(outbox_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->outbox_.pop_front();
      if (ec)
      {
        self->writing_ = false;
        self->hub_.sessions.erase(self);
        return;
      }
      if (self->outbox_.empty())
      {
        self->writing_ = false;
      }
      else
      {
        self->write();
      }
    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  Hub& hub_;
  Inbox inbox_;
  std::string hello_;
  beast::flat_buffer buffer_;
  std::deque<std::string> outbox_;
  bool writing_ = false;
};

}  // namespace

struct Server::Impl
{
  Impl(const Scenario& s, ServerOptions o) : opts{std::move(o)}, core{s, opts.ticklog}, acceptor{ioc} {}

  ServerOptions opts;
  ConsoleCore core;
  net::io_context ioc;
  tcp::acceptor acceptor;
  Hub hub;
  std::thread io_thread;
  std::thread sched_thread;
  std::atomic<bool> running{false};
  std::atomic<std::uint16_t> bound_port{0};

  std::mutex inbox_mutex;
  std::deque<std::pair<std::weak_ptr<Session>, std::string>> inbox;

  std::mutex done_mutex;
  std::condition_variable done_cv;
  bool done = false;

  void accept()
  {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec)
      {
        return;
      }
      auto s = std::make_shared<Session>(
        std::move(socket), hub,
        [this](std::weak_ptr<Session> from, std::string text) {
          const std::lock_guard lock{inbox_mutex};
          inbox.emplace_back(std::move(from), std::move(text));
        },
        hello_frame());
      s->run();
      accept();
    });
  }

  std::string hello_frame()
  {
    const std::lock_guard lock{core_mutex};
    return core.hello();
  }

  std::mutex core_mutex;

  void schedule()
  {
    using clock = std::chrono::steady_clock;
    const auto period = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(1.0 / opts.tick_rate));
    auto next = clock::now();
    std::uint64_t ticks = 0;
    while (running)
    {
      next += period;
      std::this_thread::sleep_until(next);

      std::deque<std::pair<std::weak_ptr<Session>, std::string>> batch;
      {
        const std::lock_guard lock{inbox_mutex};
        batch.swap(inbox);
      }
      std::string snapshot;
      {
        const std::lock_guard lock{core_mutex};
        for (auto& [from, text] : batch)
        {
          Reply r = core.handle(text);
          net::post(ioc, [from, frame = std::move(r.frame)]() mutable {
            if (auto s = from.lock())
            {
              s->send(std::move(frame));
            }
          });
        }
        try
        {
          snapshot = core.tick();
        }
        catch (const std::exception& e)
        {
          snapshot = error_frame(nullptr, std::string("tick failed: ") + e.what());
          running = false;
        }
      }
      net::post(ioc, [this, snapshot = std::move(snapshot)]() {
        for (const auto& s : hub.sessions)
        {
          s->send(snapshot);
        }
      });
      if (opts.tick_limit && ++ticks >= *opts.tick_limit)
      {
        running = false;
      }
    }
    const std::lock_guard lock{done_mutex};
    done = true;
    done_cv.notify_all();
  }
};

Server::Server(const Scenario& s, ServerOptions opts) : impl_{std::make_unique<Impl>(s, std::move(opts))}
{
  if (!(impl_->opts.tick_rate > 0.0))
  {
    throw InvalidInput("tick rate must be positive");
  }
}

Server::~Server() { stop(); }

void Server::start()
{
  Impl& m = *impl_;
  const auto address = net::ip::make_address(m.opts.address);
  const tcp::endpoint ep{address, m.opts.port};
  m.acceptor.open(ep.protocol());
  m.acceptor.set_option(net::socket_base::reuse_address(true));
  m.acceptor.bind(ep);
  m.acceptor.listen();
  m.bound_port = m.acceptor.local_endpoint().port();
  m.running = true;
  m.accept();
  m.io_thread = std::thread([&m] {
    auto guard = net::make_work_guard(m.ioc);
    m.ioc.run();
  });
  m.sched_thread = std::thread([&m] { m.schedule(); });
}

void Server::wait()
{
  Impl& m = *impl_;
  std::unique_lock lock{m.done_mutex};
  m.done_cv.wait(lock, [&m] { return m.done || !m.sched_thread.joinable(); });
}

void Server::stop()
{
  if (!impl_)
  {
    return;
  }
  Impl& m = *impl_;
  m.running = false;
  if (m.sched_thread.joinable())
  {
    m.sched_thread.join();
  }
  if (m.io_thread.joinable())
  {
    net::post(m.ioc, [&m] {
      beast::error_code ec;
      m.acceptor.close(ec);
      for (const auto& s : m.hub.sessions)
      {
        s->close();
      }
      m.hub.sessions.clear();
    });
    // Let pending frames (final acks/snapshots) flush briefly.
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    m.ioc.stop();
    m.io_thread.join();
  }
}

std::uint16_t Server::port() const { return impl_->bound_port; }

}  // namespace dmu::console
