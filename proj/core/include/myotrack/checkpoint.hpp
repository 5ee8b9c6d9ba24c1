#pragma once

#include <string>

#include "myotrack/adam.hpp"
#include "myotrack/normalizer.hpp"
#include "myotrack/policy.hpp"

namespace myotrack {

/// Everything needed to resume training or run the trained policy.
struct Checkpoint {
  static constexpr int kVersion = 1;

  GaussianPolicy policy;
  ValueNet value;
  AdamState policy_adam;
  AdamState value_adam;
  bool use_normalizer = true;
  RunningNormalizer normalizer;
  long env_steps = 0;
  long updates = 0;
  /// Env step at which lr/eps decay began; -1 before the trigger.
  long decay_start = -1;
};

/// JSON with layer shapes and flat parameter arrays; doubles round-trip.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
/// Throws Error on unreadable files, unknown versions or shape mismatches.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace myotrack
