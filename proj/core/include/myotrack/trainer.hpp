#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "myotrack/checkpoint.hpp"
#include "myotrack/environment.hpp"
#include "myotrack/ppo.hpp"
#include "myotrack/rollout.hpp"

namespace myotrack {

/// Splitmix64 of (seed, stream); independent child seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

struct TrainOptions {
  PpoConfig ppo;
  long total_steps = 200'000;
  std::uint64_t seed = 0;
  /// Empty disables checkpoint files.
  std::string checkpoint_dir;
  /// Write a checkpoint every this many updates (0: final only).
  int checkpoint_every = 0;
  /// Empty disables the CSV log.
  std::string log_csv;
  /// Reduced networks for tests; empty means the default architectures.
  std::vector<int> policy_hidden;
  std::vector<int> value_hidden;
};

struct TrainingLogRow {
  long step = 0;
  long update = 0;
  /// Episodes finished during this update.
  int episodes = 0;
  /// Trailing-window statistics over finished episodes.
  double mean_return = 0.0;
  double mean_length = 0.0;
  double success_rate = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double lr = 0.0;
  double eps = 0.0;
};

using EnvFactory = std::function<std::unique_ptr<Environment>(int env_index)>;

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<TrainingLogRow> log;
};

/// floor(total_steps / (num_envs * steps_per_env)) rounds of collect_sync,
/// GAE and ppo_update. `resume` continues from a saved checkpoint.
TrainResult train(const EnvFactory& factory, const TrainOptions& options,
                  std::optional<Checkpoint> resume = std::nullopt);

/// Header: step,update,episodes,mean_return,mean_length,success_rate,
/// policy_loss,value_loss,entropy,lr,eps
void write_training_log(const std::vector<TrainingLogRow>& rows, const std::string& path);
std::vector<TrainingLogRow> read_training_log(const std::string& path);

}  // namespace myotrack
