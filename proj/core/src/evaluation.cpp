#include "myotrack/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>

#include "myotrack/dynamics.hpp"
#include "myotrack/errors.hpp"
#include "myotrack/trainer.hpp"

namespace myotrack {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  return m;
}

EnvConfig open_ended(EnvConfig c, int steps) {
  c.terminate_on_reach = false;
  c.max_steps = steps;
  return c;
}

}  // namespace

FdatController::FdatController(CostWeights weights, FdatOptions options)
    : weights_(weights), options_(options) {
  weights_.validate();
}

void FdatController::bind(const SpineEnv& env) {
  if (options_.include_positions) {
    throw InvalidArgument("fdat controller tracks orientation targets only");
  }
  if (env.config().dt != options_.dt) {
    throw InvalidArgument("fdat dt differs from the environment dt");
  }
}

Eigen::VectorXd FdatController::act(const SpineEnv& env, const Eigen::VectorXd&) {
  const auto& t = env.target().orientations;
  Eigen::VectorXd target(4 * t.size());
  for (std::size_t i = 0; i < t.size(); ++i) target.segment<4>(4 * i) = to_wxyz(canonical(t[i]));
  return solve_fdat_step(env.model(), env.state(), target, env.last_action(), weights_, options_).a;
}

PolicyController::PolicyController(Checkpoint checkpoint) : ckpt_(std::move(checkpoint)) {}

void PolicyController::bind(const SpineEnv& env) {
  if (ckpt_.policy.obs_dim() != env.obs_dim() || ckpt_.policy.act_dim() != env.act_dim()) {
    throw InvalidArgument("checkpoint expects obs/act " + std::to_string(ckpt_.policy.obs_dim()) +
                          "/" + std::to_string(ckpt_.policy.act_dim()) + ", model has " +
                          std::to_string(env.obs_dim()) + "/" + std::to_string(env.act_dim()));
  }
}

Eigen::VectorXd PolicyController::act(const SpineEnv&, const Eigen::VectorXd& observation) {
  if (ckpt_.use_normalizer) return ckpt_.policy.mean_action(ckpt_.normalizer.normalize(observation));
  return ckpt_.policy.mean_action(observation);
}

void TrialConfig::validate() const {
  if (trials < 1) throw InvalidArgument("trials must be >= 1");
  if (samples < 1) throw InvalidArgument("samples must be >= 1");
}

std::uint64_t trial_seed(std::uint64_t seed, int index) {
  return mix_seed(seed, 1000 + static_cast<std::uint64_t>(index));
}

MetricsReport run_eval(const ChainModel& model, const EnvConfig& env_config,
                       Controller& controller, const TrialConfig& tc) {
  tc.validate();
  SpineEnv env(model, open_ended(env_config, tc.samples));
  controller.bind(env);

  MetricsReport report;
  report.controller = controller.name();
  report.num_bodies = model.num_bodies();
  report.num_muscles = model.num_muscles();

  std::vector<double> all_diffs, all_norms, all_times;
  double sum_c = 0.0, sum_s = 0.0, sum_final = 0.0;
  for (int trial = 0; trial < tc.trials; ++trial) {
    TrialMetrics m;
    m.trial = trial;
    m.seed = trial_seed(tc.seed, trial);
    Eigen::VectorXd obs = env.reset(m.seed);
    std::vector<double> distances, times, diffs, norms;
    std::vector<Eigen::VectorXd> activations;
    for (int k = 0; k < tc.samples; ++k) {
      const auto t0 = Clock::now();
      const Eigen::VectorXd a = controller.act(env, obs);
      times.push_back(seconds_since(t0));
      const StepResult r = env.step(a);
      obs = r.observation;
      activations.push_back(env.last_action());
      distances.push_back(pose_error_deg(env.state(), env.target()));
      m.final_distance_sq = r.info.distance_sq;
    }
    m.error_c = mean_std(distances).mean;
    m.error_s = distances.size() >= 2 ? metric_stability(distances) : 0.0;
    for (std::size_t t = 1; t < activations.size(); ++t) {
      diffs.push_back((activations[t] - activations[t - 1]).norm());
    }
    for (const auto& a : activations) norms.push_back(a.norm());
    m.error_t = mean_std(diffs);
    m.error_e = mean_std(norms);
    m.mean_step_time = mean_std(times).mean;

    sum_c += m.error_c;
    sum_s += m.error_s;
    sum_final += m.final_distance_sq;
    all_diffs.insert(all_diffs.end(), diffs.begin(), diffs.end());
    all_norms.insert(all_norms.end(), norms.begin(), norms.end());
    all_times.insert(all_times.end(), times.begin(), times.end());
    report.trials.push_back(m);
  }
  TrialMetrics& s = report.summary;
  s.trial = -1;
  s.seed = tc.seed;
  s.error_c = sum_c / tc.trials;
  s.error_s = sum_s / tc.trials;
  s.error_t = mean_std(all_diffs);
  s.error_e = mean_std(all_norms);
  s.mean_step_time = mean_std(all_times).mean;
  s.final_distance_sq = sum_final / tc.trials;
  return report;
}

void write_report_csv(const MetricsReport& report, const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "controller,trial,seed,error_c,error_s,error_t_mean,error_t_std,error_e_mean,"
         "error_e_std,mean_step_time,final_distance_sq,muscles\n";
  auto row = [&](const TrialMetrics& m, const std::string& trial) {
    out << report.controller << ',' << trial << ',' << m.seed << ',' << m.error_c << ','
        << m.error_s << ',' << m.error_t.mean << ',' << m.error_t.std << ',' << m.error_e.mean
        << ',' << m.error_e.std << ',' << m.mean_step_time << ',' << m.final_distance_sq << ','
        << report.num_muscles << '\n';
  };
  for (const auto& m : report.trials) row(m, std::to_string(m.trial));
  row(report.summary, "summary");
  if (!out) throw Error("failed writing " + path);
}

TimingResult timing_benchmark(const ChainModel& model, const EnvConfig& env_config,
                              Controller& fdat, Controller& policy, int n_steps,
                              std::uint64_t seed) {
  if (n_steps < 1) throw InvalidArgument("timing benchmark needs at least one step");
  constexpr int kWarmup = 3;
  SpineEnv env(model, open_ended(env_config, n_steps + kWarmup));
  fdat.bind(env);
  policy.bind(env);
  Eigen::VectorXd obs = env.reset(seed);
  std::vector<double> tf, tp;
  for (int k = 0; k < n_steps + kWarmup; ++k) {
    auto t0 = Clock::now();
    const Eigen::VectorXd a = fdat.act(env, obs);
    const double f = seconds_since(t0);
    t0 = Clock::now();
    const Eigen::VectorXd b = policy.act(env, obs);
    const double p = seconds_since(t0);
    if (!b.allFinite()) throw Error("policy produced a non-finite action");
    if (k >= kWarmup) {
      tf.push_back(f);
      tp.push_back(p);
    }
    obs = env.step(a).observation;
  }
  TimingResult r;
  r.steps = n_steps;
  r.fdat_step_time = median(tf);
  r.policy_step_time = median(tp);
  r.ratio = r.policy_step_time > 0.0 ? r.fdat_step_time / r.policy_step_time : 0.0;
  return r;
}

}  // namespace myotrack
