#pragma once

#include <cstddef>
#include <memory>
#include <string>

#include "myotrack/chain_model.hpp"
#include "myotrack/spine_env.hpp"

namespace myotrack {

struct ServiceOptions {
  std::string host = "127.0.0.1";
  /// 0 picks a free port.
  int port = 8080;
  int max_sessions = 64;
  double idle_timeout_seconds = 300.0;
  /// How often the background reaper looks for idle sessions.
  double reap_interval_seconds = 5.0;
};

/// MYOTRACK_PORT, when set to a valid port, replaces `configured`.
int resolve_port(int configured);

struct HttpReply {
  int status = 200;
  std::string body;
};

/// Session-scoped REST front end over SpineEnv instances.
///
///   GET    /v1/spec
///   GET    /v1/health
///   POST   /v1/sessions               {"seed": n}?       -> sessionId, observation
///   POST   /v1/sessions/{id}/reset    {"seed": n}?       -> observation
///   POST   /v1/sessions/{id}/step     {"action": [...]}  -> observation, reward, terminal, info
///   DELETE /v1/sessions/{id}
///
/// Errors carry {"error": message, "code": name}.
class EnvService {
 public:
  EnvService(ChainModel model, EnvConfig env, ServiceOptions options = {});
  ~EnvService();
  EnvService(const EnvService&) = delete;
  EnvService& operator=(const EnvService&) = delete;

  /// Binds and serves on a background thread; returns the bound port.
  /// Throws Error when the address cannot be bound.
  int start();
  /// Stops accepting requests and joins the server threads.
  void stop();
  bool running() const;
  int port() const;

  /// Dispatches one request without the network.
  HttpReply handle(const std::string& method, const std::string& path, const std::string& body);

  std::size_t session_count() const;
  /// Drops sessions idle for longer than the timeout; returns how many.
  std::size_t reap_idle();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace myotrack
