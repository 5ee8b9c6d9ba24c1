#include "myotrack/env_service.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <map>
#include <mutex>
#include <random>
#include <regex>
#include <thread>

#include <httplib.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "myotrack/errors.hpp"

namespace myotrack {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

struct Session {
  std::mutex mutex;
  SpineEnv env;
  std::uint64_t seed = 0;
  Clock::time_point last_activity = Clock::now();

  Session(const ChainModel& m, const EnvConfig& c) : env(m, c) {}
};

struct HttpError {
  int status;
  std::string code;
  std::string message;
};

HttpReply error_reply(const HttpError& e) {
  return {e.status, json{{"error", e.message}, {"code", e.code}}.dump()};
}

HttpReply ok(const json& j, int status = 200) { return {status, j.dump()}; }

std::vector<double> to_vector(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

json parse_body(const std::string& body) {
  if (body.empty()) return json::object();
  try {
    json j = json::parse(body);
    if (!j.is_object()) throw HttpError{400, "bad_request", "request body must be a JSON object"};
    return j;
  } catch (const json::exception& e) {
    throw HttpError{400, "bad_request", std::string("malformed JSON: ") + e.what()};
  }
}

std::optional<std::uint64_t> optional_seed(const json& j) {
  if (!j.contains("seed") || j.at("seed").is_null()) return std::nullopt;
  if (!j.at("seed").is_number_unsigned() && !j.at("seed").is_number_integer()) {
    throw HttpError{400, "bad_request", "seed must be a nonnegative integer"};
  }
  if (j.at("seed").is_number_integer() && j.at("seed").get<std::int64_t>() < 0) {
    throw HttpError{400, "bad_request", "seed must be a nonnegative integer"};
  }
  return j.at("seed").get<std::uint64_t>();
}

}  // namespace

int resolve_port(int configured) {
  const char* env = std::getenv("MYOTRACK_PORT");
  if (env == nullptr || *env == '\0') return configured;
  char* end = nullptr;
  const long p = std::strtol(env, &end, 10);
  if (*end != '\0' || p < 0 || p > 65535) {
    spdlog::warn("ignoring invalid MYOTRACK_PORT '{}'", env);
    return configured;
  }
  return static_cast<int>(p);
}

struct EnvService::Impl {
  ChainModel model;
  EnvConfig env_config;
  ServiceOptions options;
  int obs_dim = 0;
  int act_dim = 0;

  mutable std::mutex sessions_mutex;
  std::map<std::string, std::shared_ptr<Session>> sessions;
  std::mt19937_64 id_rng{std::random_device{}()};

  httplib::Server server;
  std::thread server_thread;
  std::thread reaper_thread;
  std::mutex reaper_mutex;
  std::condition_variable reaper_cv;
  bool stopping = false;
  std::atomic<int> bound_port{0};

  std::string new_id() {
    static const char* hex = "0123456789abcdef";
    std::string id(24, '0');
    for (char& c : id) c = hex[id_rng() & 15];
    return id;
  }

  std::shared_ptr<Session> find(const std::string& id) {
    std::lock_guard lock(sessions_mutex);
    auto it = sessions.find(id);
    if (it == sessions.end()) throw HttpError{404, "unknown_session", "unknown session " + id};
    return it->second;
  }

  json observation_reply(const Eigen::VectorXd& obs) { return {{"observation", to_vector(obs)}}; }

  HttpReply spec() {
    return ok({{"obsDim", obs_dim},
               {"actDim", act_dim},
               {"dt", env_config.dt},
               {"maxSteps", env_config.max_steps},
               {"numBodies", model.num_bodies()},
               {"numMuscles", model.num_muscles()},
               {"reachThreshold", env_config.reach_threshold},
               {"actionLow", 0.0},
               {"actionHigh", 1.0}});
  }

  HttpReply create(const json& req) {
    auto s = std::make_shared<Session>(model, env_config);
    std::string id;
    {
      std::lock_guard lock(sessions_mutex);
      if (static_cast<int>(sessions.size()) >= options.max_sessions) {
        throw HttpError{503, "session_limit",
                        "session limit " + std::to_string(options.max_sessions) + " reached"};
      }
      s->seed = optional_seed(req).value_or(id_rng());
      do {
        id = new_id();
      } while (sessions.count(id));
      sessions.emplace(id, s);
    }
    std::lock_guard lock(s->mutex);
    json j = observation_reply(s->env.reset(s->seed));
    j["sessionId"] = id;
    j["seed"] = s->seed;
    return ok(j, 201);
  }

  HttpReply reset(const std::string& id, const json& req) {
    auto s = find(id);
    std::lock_guard lock(s->mutex);
    s->last_activity = Clock::now();
    if (auto seed = optional_seed(req)) {
      s->seed = *seed;
    } else {
      std::lock_guard l(sessions_mutex);
      s->seed = id_rng();
    }
    json j = observation_reply(s->env.reset(s->seed));
    j["seed"] = s->seed;
    return ok(j);
  }

  HttpReply step(const std::string& id, const json& req) {
    auto s = find(id);
    if (!req.contains("action") || !req.at("action").is_array()) {
      throw HttpError{400, "bad_action", "action must be an array of numbers"};
    }
    const json& a = req.at("action");
    if (static_cast<int>(a.size()) != act_dim) {
      throw HttpError{400, "bad_action",
                      "action length " + std::to_string(a.size()) + " != " + std::to_string(act_dim)};
    }
    Eigen::VectorXd action(act_dim);
    for (int i = 0; i < act_dim; ++i) {
      if (!a[i].is_number()) throw HttpError{400, "bad_action", "action entries must be numbers"};
      action[i] = a[i].get<double>();
    }
    std::lock_guard lock(s->mutex);
    s->last_activity = Clock::now();
    if (s->env.awaiting_reset()) {
      throw HttpError{409, "episode_over", "episode is over; reset the session"};
    }
    StepResult r;
    try {
      r = s->env.step(action);
    } catch (const InvalidArgument& e) {
      throw HttpError{400, "bad_action", e.what()};
    }
    json j = observation_reply(r.observation);
    j["reward"] = r.reward;
    j["terminal"] = r.terminal;
    j["info"] = {{"distanceSq", r.info.distance_sq},
                 {"activationNorm", r.info.activation_norm},
                 {"activationDelta", r.info.activation_delta},
                 {"reason", r.info.reason},
                 {"step", s->env.step_count()}};
    return ok(j);
  }

  HttpReply remove(const std::string& id) {
    std::lock_guard lock(sessions_mutex);
    if (sessions.erase(id) == 0) throw HttpError{404, "unknown_session", "unknown session " + id};
    return ok({{"deleted", id}});
  }

  HttpReply dispatch(const std::string& method, const std::string& path, const std::string& body) {
    static const std::regex session_path(R"(^/v1/sessions/([A-Za-z0-9]+)(/reset|/step)?$)");
    try {
      if (path == "/v1/spec") {
        if (method != "GET") throw HttpError{405, "method_not_allowed", method + " " + path};
        return spec();
      }
      if (path == "/v1/health") {
        if (method != "GET") throw HttpError{405, "method_not_allowed", method + " " + path};
        std::lock_guard lock(sessions_mutex);
        return ok({{"status", "ok"}, {"sessions", sessions.size()}});
      }
      if (path == "/v1/sessions") {
        if (method != "POST") throw HttpError{405, "method_not_allowed", method + " " + path};
        return create(parse_body(body));
      }
      std::smatch m;
      if (std::regex_match(path, m, session_path)) {
        const std::string id = m[1];
        const std::string action = m[2];
        if (action.empty() && method == "DELETE") return remove(id);
        if (action == "/reset" && method == "POST") return reset(id, parse_body(body));
        if (action == "/step" && method == "POST") return step(id, parse_body(body));
        throw HttpError{405, "method_not_allowed", method + " " + path};
      }
      throw HttpError{404, "not_found", "no route " + path};
    } catch (const HttpError& e) {
      return error_reply(e);
    } catch (const std::exception& e) {
      spdlog::error("{} {} failed: {}", method, path, e.what());
      return error_reply({500, "internal", e.what()});
    }
  }

  std::size_t reap() {
    const auto limit = std::chrono::duration<double>(options.idle_timeout_seconds);
    const auto now = Clock::now();
    std::lock_guard lock(sessions_mutex);
    std::size_t n = 0;
    for (auto it = sessions.begin(); it != sessions.end();) {
      std::unique_lock session_lock(it->second->mutex, std::try_to_lock);
      // A session in use is by definition not idle.
      if (session_lock.owns_lock() && now - it->second->last_activity > limit) {
        spdlog::info("reaping idle session {}", it->first);
        session_lock.unlock();
        it = sessions.erase(it);
        ++n;
      } else {
        ++it;
      }
    }
    return n;
  }
};

EnvService::EnvService(ChainModel model, EnvConfig env, ServiceOptions options)
    : impl_(std::make_unique<Impl>()) {
  if (options.max_sessions < 1) throw InvalidArgument("max_sessions must be >= 1");
  if (!(options.idle_timeout_seconds > 0.0)) throw InvalidArgument("idle timeout must be positive");
  SpineEnv probe(model, env);
  impl_->obs_dim = probe.obs_dim();
  impl_->act_dim = probe.act_dim();
  impl_->model = std::move(model);
  impl_->env_config = std::move(env);
  impl_->options = std::move(options);

  auto route = [this](const httplib::Request& req, httplib::Response& res) {
    const HttpReply r = impl_->dispatch(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  auto& s = impl_->server;
  // SO_REUSEADDR only: SO_REUSEPORT would let a second service share the port.
  s.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  s.Get(R"(/.*)", route);
  s.Post(R"(/.*)", route);
  s.Delete(R"(/.*)", route);
  s.Put(R"(/.*)", route);
}

EnvService::~EnvService() { stop(); }

int EnvService::start() {
  if (running()) return port();
  auto& o = impl_->options;
  int port = o.port;
  if (port == 0) {
    port = impl_->server.bind_to_any_port(o.host);
    if (port < 0) throw Error("cannot bind " + o.host);
  } else if (!impl_->server.bind_to_port(o.host, port)) {
    throw Error("cannot bind " + o.host + ":" + std::to_string(port));
  }
  impl_->bound_port = port;
  {
    std::lock_guard lock(impl_->reaper_mutex);
    impl_->stopping = false;
  }
  impl_->server_thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->reaper_thread = std::thread([this] {
    std::unique_lock lock(impl_->reaper_mutex);
    const auto period = std::chrono::duration<double>(impl_->options.reap_interval_seconds);
    while (!impl_->reaper_cv.wait_for(lock, period, [this] { return impl_->stopping; })) {
      lock.unlock();
      impl_->reap();
      lock.lock();
    }
  });
  impl_->server.wait_until_ready();
  spdlog::info("env service listening on {}:{}", o.host, port);
  return port;
}

void EnvService::stop() {
  if (!impl_) return;
  {
    std::lock_guard lock(impl_->reaper_mutex);
    impl_->stopping = true;
  }
  impl_->reaper_cv.notify_all();
  if (impl_->server_thread.joinable()) {
    impl_->server.stop();
    impl_->server_thread.join();
  }
  if (impl_->reaper_thread.joinable()) impl_->reaper_thread.join();
  impl_->bound_port = 0;
}

bool EnvService::running() const { return impl_->server_thread.joinable(); }
int EnvService::port() const { return impl_->bound_port; }

HttpReply EnvService::handle(const std::string& method, const std::string& path,
                             const std::string& body) {
  return impl_->dispatch(method, path, body);
}

std::size_t EnvService::session_count() const {
  std::lock_guard lock(impl_->sessions_mutex);
  return impl_->sessions.size();
}

std::size_t EnvService::reap_idle() { return impl_->reap(); }

}  // namespace myotrack
