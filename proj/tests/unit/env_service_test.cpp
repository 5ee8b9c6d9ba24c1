#include <chrono>
#include <cstdlib>
#include <thread>

#include <gtest/gtest.h>

#include "myotrack/env_service.hpp"
#include "myotrack/errors.hpp"
#include "myotrack/remote_env.hpp"

// After Eigen: httplib pulls in system headers that clash with Eigen internals.
#include <httplib.h>
#include <json.hpp>

namespace myotrack {
namespace {

using nlohmann::json;

ChainModel desk_chain() {
  ChainConfig c;
  c.num_bodies = 2;
  c.muscles_per_level = 4;
  return build_chain(c);
}

ServiceOptions ephemeral() {
  ServiceOptions o;
  o.port = 0;
  return o;
}

json body(const HttpReply& r) { return json::parse(r.body); }

TEST(Dispatch, SpecOfDefaultModel) {
  EnvService s(build_chain(ChainConfig{}), EnvConfig{});
  const HttpReply r = s.handle("GET", "/v1/spec", "");
  ASSERT_EQ(r.status, 200);
  const json j = body(r);
  EXPECT_EQ(j["obsDim"], 40);
  EXPECT_EQ(j["actDim"], 40);
  EXPECT_EQ(j["dt"], 0.01);
  EXPECT_EQ(j["maxSteps"], 30);
}

TEST(Dispatch, CreateStepDelete) {
  EnvService s(desk_chain(), EnvConfig{});
  HttpReply r = s.handle("POST", "/v1/sessions", R"({"seed": 7})");
  ASSERT_EQ(r.status, 201);
  const std::string id = body(r)["sessionId"];
  EXPECT_EQ(body(r)["observation"].size(), 16u);
  EXPECT_EQ(s.session_count(), 1u);

  r = s.handle("POST", "/v1/sessions/" + id + "/step", R"({"action": [0,0,0,0,0,0,0,0]})");
  ASSERT_EQ(r.status, 200) << r.body;
  const json j = body(r);
  EXPECT_TRUE(j.contains("reward"));
  EXPECT_TRUE(j["info"].contains("distanceSq"));

  EXPECT_EQ(s.handle("DELETE", "/v1/sessions/" + id, "").status, 200);
  EXPECT_EQ(s.session_count(), 0u);
  EXPECT_EQ(s.handle("DELETE", "/v1/sessions/" + id, "").status, 404);
}

TEST(Dispatch, ErrorCodes) {
  EnvService s(desk_chain(), EnvConfig{});
  HttpReply r = s.handle("POST", "/v1/sessions/nosuch/step", R"({"action": []})");
  EXPECT_EQ(r.status, 404);
  EXPECT_EQ(body(r)["code"], "unknown_session");
  EXPECT_EQ(s.handle("POST", "/v1/sessions/nosuch/reset", "").status, 404);

  const std::string id = body(s.handle("POST", "/v1/sessions", R"({"seed": 1})"))["sessionId"];
  r = s.handle("POST", "/v1/sessions/" + id + "/step", R"({"action": [0, 0]})");
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(body(r)["error"].get<std::string>().rfind("action length", 0), 0u);
  EXPECT_EQ(s.handle("POST", "/v1/sessions/" + id + "/step", R"({"action": "x"})").status, 400);
  EXPECT_EQ(s.handle("POST", "/v1/sessions/" + id + "/step", R"({"action": [0,0,0,0,0,0,0,"a"]})").status,
            400);
  EXPECT_EQ(s.handle("POST", "/v1/sessions/" + id + "/step", "{not json").status, 400);
  EXPECT_EQ(s.handle("POST", "/v1/sessions", R"({"seed": -3})").status, 400);
  EXPECT_EQ(s.handle("GET", "/v1/nothing", "").status, 404);
  EXPECT_EQ(s.handle("POST", "/v1/spec", "").status, 405);
}

TEST(Dispatch, StepAfterTerminalIsConflict) {
  EnvConfig c;
  c.max_steps = 2;
  EnvService s(desk_chain(), c);
  const std::string id = body(s.handle("POST", "/v1/sessions", R"({"seed": 3})"))["sessionId"];
  const std::string zero = R"({"action": [0,0,0,0,0,0,0,0]})";
  const std::string step = "/v1/sessions/" + id + "/step";
  HttpReply r;
  do {
    r = s.handle("POST", step, zero);
    ASSERT_EQ(r.status, 200);
  } while (!body(r)["terminal"].get<bool>());
  r = s.handle("POST", step, zero);
  EXPECT_EQ(r.status, 409);
  EXPECT_EQ(body(r)["code"], "episode_over");
  EXPECT_EQ(s.handle("POST", "/v1/sessions/" + id + "/reset", R"({"seed": 3})").status, 200);
  EXPECT_EQ(s.handle("POST", step, zero).status, 200);
}

TEST(Dispatch, ResetWithSeedRepeats) {
  EnvService s(desk_chain(), EnvConfig{});
  const std::string id = body(s.handle("POST", "/v1/sessions", "{}"))["sessionId"];
  const json a = body(s.handle("POST", "/v1/sessions/" + id + "/reset", R"({"seed": 11})"));
  const json b = body(s.handle("POST", "/v1/sessions/" + id + "/reset", R"({"seed": 11})"));
  EXPECT_EQ(a["observation"], b["observation"]);
}

TEST(Dispatch, SessionLimit) {
  ServiceOptions o;
  o.max_sessions = 2;
  EnvService s(desk_chain(), EnvConfig{}, o);
  EXPECT_EQ(s.handle("POST", "/v1/sessions", "").status, 201);
  EXPECT_EQ(s.handle("POST", "/v1/sessions", "").status, 201);
  const HttpReply r = s.handle("POST", "/v1/sessions", "");
  EXPECT_EQ(r.status, 503);
  EXPECT_EQ(body(r)["code"], "session_limit");
}

TEST(Dispatch, IdleSessionsAreReaped) {
  ServiceOptions o;
  o.idle_timeout_seconds = 0.05;
  EnvService s(desk_chain(), EnvConfig{}, o);
  const std::string old_id = body(s.handle("POST", "/v1/sessions", ""))["sessionId"];
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  const std::string fresh = body(s.handle("POST", "/v1/sessions", ""))["sessionId"];
  EXPECT_EQ(s.reap_idle(), 1u);
  EXPECT_EQ(s.handle("POST", "/v1/sessions/" + old_id + "/reset", "").status, 404);
  EXPECT_EQ(s.handle("POST", "/v1/sessions/" + fresh + "/reset", "").status, 200);
}

TEST(Port, EnvironmentOverride) {
  ::setenv("MYOTRACK_PORT", "9123", 1);
  EXPECT_EQ(resolve_port(8080), 9123);
  ::setenv("MYOTRACK_PORT", "banana", 1);
  EXPECT_EQ(resolve_port(8080), 8080);
  ::unsetenv("MYOTRACK_PORT");
  EXPECT_EQ(resolve_port(8080), 8080);
}

// ---------------------------------------------------------------------------
// over the network

std::vector<Eigen::VectorXd> action_script(int n, int m, unsigned seed) {
  std::srand(seed);
  std::vector<Eigen::VectorXd> out;
  for (int k = 0; k < n; ++k) out.push_back((Eigen::VectorXd::Random(m).array() * 0.7 + 0.4).matrix());
  return out;
}

TEST(Network, RemoteEpisodeMatchesInProcessBitForBit) {
  EnvConfig c;
  c.max_steps = 100;
  c.terminate_on_reach = false;
  EnvService service(desk_chain(), c, ephemeral());
  const int port = service.start();

  RemoteEnv remote("127.0.0.1", port);
  SpineEnv local(desk_chain(), c);
  EXPECT_EQ(remote.obs_dim(), local.obs_dim());
  EXPECT_EQ(remote.reset(99), local.reset(99));
  for (const auto& a : action_script(100, 8, 5)) {
    const StepResult r = remote.step(a);
    const StepResult l = local.step(a);
    ASSERT_EQ(r.reward, l.reward);
    ASSERT_EQ(r.observation, l.observation);
    ASSERT_EQ(r.info.distance_sq, l.info.distance_sq);
    ASSERT_EQ(r.terminal, l.terminal);
  }
}

TEST(Network, ConcurrentSessionsAreIsolated) {
  EnvService service(desk_chain(), EnvConfig{}, ephemeral());
  const int port = service.start();
  const int kClients = 4;
  std::vector<std::vector<double>> remote_rewards(kClients), local_rewards(kClients);
  std::vector<std::thread> threads;
  for (int i = 0; i < kClients; ++i) {
    threads.emplace_back([&, i] {
      RemoteEnv env("127.0.0.1", port);
      env.reset(100 + i);
      for (int k = 0; k < 20; ++k) {
        const StepResult r = env.step(Eigen::VectorXd::Constant(8, 0.1 * i));
        remote_rewards[i].push_back(r.reward);
        if (r.terminal) break;
      }
    });
  }
  for (auto& t : threads) t.join();
  for (int i = 0; i < kClients; ++i) {
    SpineEnv env(desk_chain(), EnvConfig{});
    env.reset(100 + i);
    for (int k = 0; k < 20; ++k) {
      const StepResult r = env.step(Eigen::VectorXd::Constant(8, 0.1 * i));
      local_rewards[i].push_back(r.reward);
      if (r.terminal) break;
    }
    EXPECT_EQ(remote_rewards[i], local_rewards[i]) << "client " << i;
  }
}

TEST(Network, ClientSurfacesErrors) {
  EnvService service(desk_chain(), EnvConfig{}, ephemeral());
  const int port = service.start();
  RemoteEnv env("127.0.0.1", port);
  EXPECT_THROW(env.step(Eigen::VectorXd::Zero(8)), Error);
  env.reset(1);
  EXPECT_THROW(env.step(Eigen::VectorXd::Zero(3)), InvalidArgument);
  const std::string id = env.session_id();
  EXPECT_EQ(service.session_count(), 1u);
  service.stop();
  EXPECT_FALSE(service.running());
  EXPECT_THROW(env.step(Eigen::VectorXd::Zero(8)), Error);
  EXPECT_THROW(RemoteEnv("127.0.0.1", port), Error);
}

TEST(Network, BindFailure) {
  EnvService a(desk_chain(), EnvConfig{}, ephemeral());
  const int port = a.start();
  ServiceOptions o;
  o.port = port;
  EnvService b(desk_chain(), EnvConfig{}, o);
  EXPECT_THROW(b.start(), Error);
}

TEST(Network, RawHttpRoundTrip) {
  EnvService service(desk_chain(), EnvConfig{}, ephemeral());
  httplib::Client cli("127.0.0.1", service.start());
  auto res = cli.Post("/v1/sessions", R"({"seed": 4})", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 201);
  EXPECT_EQ(res->get_header_value("Content-Type"), "application/json");
  const std::string id = json::parse(res->body)["sessionId"];
  res = cli.Post("/v1/sessions/" + id + "/step", R"({"action": [1]})", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  EXPECT_EQ(json::parse(res->body)["code"], "bad_action");
}

}  // namespace
}  // namespace myotrack
