#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Core>

namespace myotrack {

struct StepInfo {
  /// Squared quaternion-stack distance to the target after the step.
  double distance_sq = 0.0;
  double activation_norm = 0.0;
  double activation_delta = 0.0;
  /// "reached", "step_limit", or empty while the episode runs.
  std::string reason;
};

struct StepResult {
  Eigen::VectorXd observation;
  double reward = 0.0;
  bool terminal = false;
  StepInfo info;
};

/// Episodic environment seen by the trainer. Implementations need not be
/// thread-safe; one instance is driven by one worker.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual int obs_dim() const = 0;
  virtual int act_dim() const = 0;
  virtual int max_steps() const = 0;
  virtual Eigen::VectorXd reset(std::uint64_t seed) = 0;
  virtual StepResult step(const Eigen::VectorXd& action) = 0;
};

}  // namespace myotrack
