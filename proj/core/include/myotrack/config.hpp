#pragma once

#include <string>

#include "myotrack/chain_model.hpp"
#include "myotrack/evaluation.hpp"
#include "myotrack/fdat.hpp"
#include "myotrack/spine_env.hpp"
#include "myotrack/trainer.hpp"

namespace myotrack {

/// Settings shared by the command-line tools. Every section is optional;
/// missing keys keep their defaults, unknown keys are rejected.
///
///   { "model": {...}, "env": {...}, "fdat": {...}, "train": {...}, "eval": {...} }
struct AppConfig {
  ChainConfig model;
  EnvConfig env;
  /// Weights of the FDAT objective; the env reward uses env.weights.
  CostWeights fdat_weights;
  FdatOptions fdat;
  TrainOptions train;
  TrialConfig eval;
};

/// Throws InvalidArgument on malformed JSON, unknown keys or bad values.
AppConfig parse_config(const std::string& json_text);
AppConfig load_config(const std::string& path);

/// Effective configuration as pretty-printed JSON.
std::string config_to_json(const AppConfig& config);

}  // namespace myotrack
