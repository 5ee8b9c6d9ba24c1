#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "myotrack/chain_model.hpp"
#include "myotrack/dynamics.hpp"
#include "myotrack/environment.hpp"
#include "myotrack/fdat.hpp"
#include "myotrack/quaternion.hpp"

namespace myotrack {

struct EnvConfig {
  /// Threshold on the squared quaternion-stack distance.
  double reach_threshold = 0.05;
  int max_steps = 30;
  double bonus = 5.0;
  CostWeights weights;
  /// Half-widths (degrees) of the top-body target rotation about x
  /// (flexion/extension), y (lateral bending) and z (axial rotation).
  double flexion_deg = 30.0;
  double lateral_deg = 20.0;
  double axial_deg = 10.0;
  bool include_target = true;
  /// When false, reaching the threshold does not end the episode.
  bool terminate_on_reach = true;
  double dt = kDefaultTimestep;

  void validate() const;
};

/// Desired orientation per body, bottom body first.
struct TargetSpec {
  std::vector<Quat> orientations;
};

/// Top-body rotation Rz(axial) Ry(lateral) Rx(flexion) drawn uniformly from
/// the domain; body j of n (from the bottom) gets (j + 1) / n of it.
TargetSpec sample_target(std::mt19937_64& rng, const EnvConfig& config, int num_bodies);
TargetSpec target_from_top(const Quat& top, int num_bodies);

/// Sum over bodies of |q_aligned - t|^2 on (w, x, y, z).
double distance_sq(const ModelState& state, const TargetSpec& target);

double reward(const ModelState& state, const TargetSpec& target, const Eigen::VectorXd& a,
              const Eigen::VectorXd& a_prev, const EnvConfig& config);

class SpineEnv final : public Environment {
 public:
  SpineEnv(ChainModel model, EnvConfig config);

  int obs_dim() const override;
  int act_dim() const override { return model_.num_muscles(); }
  int max_steps() const override { return config_.max_steps; }

  Eigen::VectorXd reset(std::uint64_t seed) override;
  /// Reset to rest with an explicit target.
  Eigen::VectorXd reset_to(const TargetSpec& target);
  /// Clips the action to [0, 1]. Throws Error after a terminal step.
  StepResult step(const Eigen::VectorXd& action) override;

  const ChainModel& model() const { return model_; }
  const EnvConfig& config() const { return config_; }
  const ModelState& state() const { return state_; }
  const TargetSpec& target() const { return target_; }
  const Eigen::VectorXd& last_action() const { return a_prev_; }
  int step_count() const { return steps_; }
  bool awaiting_reset() const { return done_; }
  Eigen::VectorXd observation() const;

 private:
  ChainModel model_;
  EnvConfig config_;
  ModelState state_;
  TargetSpec target_;
  Eigen::VectorXd a_prev_;
  int steps_ = 0;
  bool done_ = true;
};

}  // namespace myotrack
