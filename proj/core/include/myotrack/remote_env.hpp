#pragma once

#include <memory>
#include <string>

#include "myotrack/environment.hpp"

namespace myotrack {

/// Environment proxy over the env-service REST API. One instance owns one
/// session, created on the first reset and deleted on destruction.
/// Connection failures are retried once, then surface as Error.
class RemoteEnv final : public Environment {
 public:
  RemoteEnv(const std::string& host, int port);
  ~RemoteEnv() override;
  RemoteEnv(const RemoteEnv&) = delete;
  RemoteEnv& operator=(const RemoteEnv&) = delete;

  int obs_dim() const override { return obs_dim_; }
  int act_dim() const override { return act_dim_; }
  int max_steps() const override { return max_steps_; }

  Eigen::VectorXd reset(std::uint64_t seed) override;
  StepResult step(const Eigen::VectorXd& action) override;

  const std::string& session_id() const { return session_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::string session_;
  int obs_dim_ = 0;
  int act_dim_ = 0;
  int max_steps_ = 0;
};

}  // namespace myotrack
