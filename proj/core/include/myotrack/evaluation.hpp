#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "myotrack/checkpoint.hpp"
#include "myotrack/fdat.hpp"
#include "myotrack/metrics.hpp"
#include "myotrack/spine_env.hpp"

namespace myotrack {

class Controller {
 public:
  virtual ~Controller() = default;
  virtual std::string name() const = 0;
  /// Throws InvalidArgument if the controller cannot drive this env.
  virtual void bind(const SpineEnv& env) = 0;
  /// Excitations for the env's current state; the env clips them.
  virtual Eigen::VectorXd act(const SpineEnv& env, const Eigen::VectorXd& observation) = 0;
};

/// One inverse-dynamics solve per step toward the episode target.
class FdatController final : public Controller {
 public:
  FdatController(CostWeights weights, FdatOptions options = {});
  std::string name() const override { return "fdat"; }
  void bind(const SpineEnv& env) override;
  Eigen::VectorXd act(const SpineEnv& env, const Eigen::VectorXd& observation) override;

 private:
  CostWeights weights_;
  FdatOptions options_;
};

/// Deterministic policy: the Gaussian mean.
class PolicyController final : public Controller {
 public:
  explicit PolicyController(Checkpoint checkpoint);
  std::string name() const override { return "policy"; }
  void bind(const SpineEnv& env) override;
  Eigen::VectorXd act(const SpineEnv& env, const Eigen::VectorXd& observation) override;

 private:
  Checkpoint ckpt_;
};

struct TrialConfig {
  int trials = 60;
  int samples = 100;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Reset seed of trial `index`; depends only on the base seed.
std::uint64_t trial_seed(std::uint64_t seed, int index);

struct TrialMetrics {
  int trial = 0;
  std::uint64_t seed = 0;
  double error_c = 0.0;
  double error_s = 0.0;
  MeanStd error_t;
  MeanStd error_e;
  double mean_step_time = 0.0;
  double final_distance_sq = 0.0;
};

struct MetricsReport {
  std::string controller;
  int num_bodies = 0;
  int num_muscles = 0;
  std::vector<TrialMetrics> trials;
  /// error_c and error_s averaged over trials; error_t and error_e pooled
  /// over every step of every trial.
  TrialMetrics summary;
};

/// Runs each trial for `samples` steps without early termination.
MetricsReport run_eval(const ChainModel& model, const EnvConfig& env_config,
                       Controller& controller, const TrialConfig& trials);

/// Fixed header; one row per trial then a row with trial = "summary".
void write_report_csv(const MetricsReport& report, const std::string& path);

struct TimingResult {
  int steps = 0;
  /// Medians over warm steps, seconds.
  double fdat_step_time = 0.0;
  double policy_step_time = 0.0;
  double ratio = 0.0;
};

/// Both controllers act on the same states; the FDAT action drives the env.
TimingResult timing_benchmark(const ChainModel& model, const EnvConfig& env_config,
                              Controller& fdat, Controller& policy, int n_steps,
                              std::uint64_t seed);

}  // namespace myotrack
