#include "myotrack/remote_env.hpp"

#include <httplib.h>
#include <json.hpp>

#include "myotrack/errors.hpp"

namespace myotrack {
namespace {

using nlohmann::json;

Eigen::VectorXd to_eigen(const json& j, int expected, const char* what) {
  if (!j.is_array() || static_cast<int>(j.size()) != expected) {
    throw Error(std::string("service returned a malformed ") + what);
  }
  Eigen::VectorXd v(expected);
  for (int i = 0; i < expected; ++i) v[i] = j[i].get<double>();
  return v;
}

}  // namespace

struct RemoteEnv::Impl {
  httplib::Client client;

  Impl(const std::string& host, int port) : client(host, port) {
    client.set_connection_timeout(5);
    client.set_read_timeout(60);
  }

  json call(const std::string& method, const std::string& path, const json* body) {
    httplib::Result res;
    for (int attempt = 0; attempt < 2; ++attempt) {
      const std::string payload = body ? body->dump() : std::string();
      if (method == "GET") {
        res = client.Get(path);
      } else if (method == "POST") {
        res = client.Post(path, payload, "application/json");
      } else {
        res = client.Delete(path);
      }
      // Only a refused connection is safe to repeat; a lost reply may have stepped.
      if (res || res.error() != httplib::Error::Connection) break;
    }
    if (!res) {
      throw Error(method + " " + path + " failed: " + httplib::to_string(res.error()));
    }
    json reply;
    try {
      reply = res->body.empty() ? json::object() : json::parse(res->body);
    } catch (const json::exception&) {
      throw Error(method + " " + path + ": response is not JSON");
    }
    if (res->status >= 400) {
      const std::string msg = reply.value("error", std::string("HTTP error"));
      const std::string code = reply.value("code", std::string("unknown"));
      const std::string text = method + " " + path + " -> " + std::to_string(res->status) + " " +
                               code + ": " + msg;
      if (res->status == 400) throw InvalidArgument(text);
      throw Error(text);
    }
    return reply;
  }
};

RemoteEnv::RemoteEnv(const std::string& host, int port)
    : impl_(std::make_unique<Impl>(host, port)) {
  const json spec = impl_->call("GET", "/v1/spec", nullptr);
  obs_dim_ = spec.at("obsDim").get<int>();
  act_dim_ = spec.at("actDim").get<int>();
  max_steps_ = spec.at("maxSteps").get<int>();
}

RemoteEnv::~RemoteEnv() {
  if (session_.empty()) return;
  try {
    impl_->call("DELETE", "/v1/sessions/" + session_, nullptr);
  } catch (const std::exception&) {
    // The service may already be gone; the reaper covers the rest.
  }
}

Eigen::VectorXd RemoteEnv::reset(std::uint64_t seed) {
  const json body{{"seed", seed}};
  json reply;
  if (session_.empty()) {
    reply = impl_->call("POST", "/v1/sessions", &body);
    session_ = reply.at("sessionId").get<std::string>();
  } else {
    reply = impl_->call("POST", "/v1/sessions/" + session_ + "/reset", &body);
  }
  return to_eigen(reply.at("observation"), obs_dim_, "observation");
}

StepResult RemoteEnv::step(const Eigen::VectorXd& action) {
  if (session_.empty()) throw Error("remote env stepped before reset");
  if (action.size() != act_dim_) {
    throw InvalidArgument("action length " + std::to_string(action.size()) + " != " +
                          std::to_string(act_dim_));
  }
  const json body{{"action", std::vector<double>(action.data(), action.data() + action.size())}};
  const json reply = impl_->call("POST", "/v1/sessions/" + session_ + "/step", &body);
  StepResult r;
  r.observation = to_eigen(reply.at("observation"), obs_dim_, "observation");
  r.reward = reply.at("reward").get<double>();
  r.terminal = reply.at("terminal").get<bool>();
  const json& info = reply.at("info");
  r.info.distance_sq = info.at("distanceSq").get<double>();
  r.info.activation_norm = info.at("activationNorm").get<double>();
  r.info.activation_delta = info.at("activationDelta").get<double>();
  r.info.reason = info.at("reason").get<std::string>();
  return r;
}

}  // namespace myotrack
