#pragma once

#include <random>
#include <vector>

#include <Eigen/Core>

#include "myotrack/adam.hpp"
#include "myotrack/policy.hpp"

namespace myotrack {

struct PpoConfig {
  double clip_eps = 0.2;
  /// Upper ratio bound 1 + stab_beta for negative advantages.
  double stab_beta = 1.0;
  double entropy_coef = 0.001;
  double value_coef = 0.5;
  double lr = 0.007;
  double gamma = 0.99;
  double gae_tau = 0.95;
  int minibatch_size = 16;
  int steps_per_env = 32;
  int epochs = 4;
  int num_envs = 4;
  /// Global gradient-norm cap per network; 0 disables.
  double max_grad_norm = 0.5;
  /// Linear decay of lr and clip_eps starts once the trailing success rate
  /// over `decay_window` episodes reaches `decay_trigger`.
  double decay_trigger = 0.5;
  int decay_window = 100;
  /// Fraction of the initial value kept at the end of the decay.
  double decay_floor = 0.0;
  bool normalize_observations = true;
  /// Bootstrap from V(s') when an episode ends by the step limit.
  bool bootstrap_truncation = false;
  /// log_std is projected into [min_log_std, max_log_std] after each step.
  double min_log_std = -5.0;
  double max_log_std = 5.0;

  void validate() const;
};

struct GaeResult {
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;
};

/// delta_t = r_t + gamma V_{t+1} (1 - done_t) - V_t with V_T = bootstrap,
/// A_t = delta_t + gamma tau (1 - done_t) A_{t+1}.
GaeResult compute_gae(const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
                      const std::vector<bool>& dones, double bootstrap_value, double gamma,
                      double tau);

/// A >= 0: min(r A, clip(r, 1 - eps, 1 + eps) A).
/// A <  0: clip(r, 1 - eps, 1 + beta) A.
double clipped_objective(double ratio, double advantage, double eps, double beta);

/// d clipped_objective / d ratio (one-sided at the kinks).
double clipped_objective_slope(double ratio, double advantage, double eps, double beta);

double linear_decay(double initial, double progress);

/// Zero mean, unit variance (population std) in place.
void normalize_advantages(Eigen::VectorXd& advantages);

struct Minibatch {
  Eigen::MatrixXd obs;      // obs_dim x B
  Eigen::MatrixXd actions;  // act_dim x B, pre-clip
  Eigen::VectorXd logp_old;
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;
};

struct PolicyLoss {
  /// -(mean clipped objective + c_s entropy)
  double loss = 0.0;
  double surrogate = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  Eigen::VectorXd ratios;
  Eigen::VectorXd grad;
};

PolicyLoss policy_loss(const GaussianPolicy& policy, const Minibatch& batch, double eps,
                       double beta, double entropy_coef, bool with_grad = true);

struct ValueLoss {
  /// c_v * mean (V - return)^2
  double loss = 0.0;
  Eigen::VectorXd grad;
};

ValueLoss value_loss(const ValueNet& value, const Minibatch& batch, double value_coef,
                     bool with_grad = true);

struct UpdateBatch {
  Eigen::MatrixXd obs;
  Eigen::MatrixXd actions;
  Eigen::VectorXd logp_old;
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;
  Eigen::Index size() const { return logp_old.size(); }
};

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  /// Largest |ratio - 1| seen on the first minibatch of the first epoch.
  double first_ratio_deviation = 0.0;
  int minibatches = 0;
  bool aborted = false;
};

/// Epochs over shuffled minibatches: Adam on the policy loss and, separately,
/// on the value loss. Advantages are normalized over the whole batch first.
/// A non-finite loss restores the pre-update parameters and sets `aborted`.
UpdateStats ppo_update(GaussianPolicy& policy, ValueNet& value, AdamState& policy_adam,
                       AdamState& value_adam, UpdateBatch batch, const PpoConfig& config,
                       double lr, double clip_eps, std::mt19937_64& rng);

}  // namespace myotrack
