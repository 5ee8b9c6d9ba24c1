#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "myotrack/environment.hpp"
#include "myotrack/normalizer.hpp"
#include "myotrack/policy.hpp"

namespace myotrack {

struct Transition {
  /// Observation as the policy saw it (normalized when a normalizer is used).
  Eigen::VectorXd observation;
  Eigen::VectorXd raw_observation;
  /// Sampled action before clipping.
  Eigen::VectorXd action;
  double logp_old = 0.0;
  double value_old = 0.0;
  double reward = 0.0;
  bool done = false;
  /// Value of the final observation when the step limit ended the episode.
  double truncation_value = 0.0;
};

struct EpisodeRecord {
  double total_reward = 0.0;
  int length = 0;
  bool success = false;
};

/// One environment plus the worker-local state that persists across
/// collections: sampler, reset-seed stream, and the running episode.
class EnvWorker {
 public:
  EnvWorker(std::unique_ptr<Environment> env, std::uint64_t seed);

  Environment& env() { return *env_; }
  std::mt19937_64& rng() { return rng_; }

 private:
  friend class RolloutCollector;
  std::unique_ptr<Environment> env_;
  std::mt19937_64 rng_;
  Eigen::VectorXd raw_obs_;
  bool needs_reset_ = true;
  EpisodeRecord running_;
};

struct RolloutBuffer {
  int num_envs = 0;
  int steps_per_env = 0;
  /// segments[e] holds env e's transitions in step order; empty if dropped.
  std::vector<std::vector<Transition>> segments;
  /// Value of the observation following each segment (0 after a done).
  std::vector<double> bootstrap_values;
  std::vector<EpisodeRecord> episodes;
  std::vector<int> dropped;

  std::size_t size() const;
};

/// Steps every worker `steps_per_env` times on its own thread with actions
/// sampled from `policy`, then joins. Finished episodes are reset with a
/// seed drawn from the worker's stream. A failing step is retried once; a
/// second failure drops that worker's rollout for this collection.
RolloutBuffer collect_sync(std::vector<EnvWorker>& workers, const GaussianPolicy& policy,
                           const ValueNet& value, const RunningNormalizer* normalizer,
                           int steps_per_env);

}  // namespace myotrack
