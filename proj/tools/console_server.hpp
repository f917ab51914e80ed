#pragma once

// Live console endpoint: runs a planner scenario in real time over a
// websocket, broadcasting snapshot frames and applying operator / agent
// control commands at tick boundaries. Protocol: docs/protocol.md.

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>

#include "dmu/headless.hpp"

namespace dmu::console
{

struct ServerOptions
{
  std::string address = "127.0.0.1";
  std::uint16_t port = 8765;  // 0 picks a free port
  double tick_rate = 100.0;   // Hz
  std::optional<std::uint64_t> tick_limit;
  std::ostream* ticklog = nullptr;
};

/// Result of handling one inbound text frame.
struct Reply
{
  std::string frame;       // ack or error frame (may be empty while pending)
  bool accepted = false;
};

/// Protocol logic without any networking, so it can be driven directly.
/// Not thread-safe; the server serializes access.
class ConsoleCore
{
public:
  explicit ConsoleCore(const Scenario& s, std::ostream* ticklog = nullptr);

  /// Applies a command frame at the current tick boundary. Malformed or
  /// rejected commands yield an error frame and leave the state unchanged.
  Reply handle(const std::string& frame);

  /// Runs one tick and returns the snapshot frame describing it.
  std::string tick();

  [[nodiscard]] std::string hello() const;
  [[nodiscard]] std::uint64_t current_tick() const { return session_.world().tick; }
  [[nodiscard]] const PlannerSession& session() const { return session_; }

private:
  PlannerSession session_;
  std::optional<TickLogWriter> writer_;
};

class Server
{
public:
  Server(const Scenario& s, ServerOptions opts);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and starts the network and scheduler threads. Throws
  /// std::runtime_error when the address cannot be bound.
  void start();
  void stop();
  /// Blocks until stop() or the tick limit.
  void wait();

  [[nodiscard]] std::uint16_t port() const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace dmu::console
