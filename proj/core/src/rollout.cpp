#include "myotrack/rollout.hpp"

#include <exception>
#include <thread>

#include <spdlog/spdlog.h>

#include "myotrack/errors.hpp"

namespace myotrack {

EnvWorker::EnvWorker(std::unique_ptr<Environment> env, std::uint64_t seed)
    : env_(std::move(env)), rng_(seed) {
  if (!env_) throw InvalidArgument("EnvWorker needs an environment");
}

std::size_t RolloutBuffer::size() const {
  std::size_t n = 0;
  for (const auto& s : segments) n += s.size();
  return n;
}

class RolloutCollector {
 public:
  struct Output {
    std::vector<Transition> transitions;
    std::vector<EpisodeRecord> episodes;
    double bootstrap = 0.0;
    bool failed = false;
    std::string error;
  };

  static Output run(EnvWorker& w, const GaussianPolicy& policy, const ValueNet& value,
                    const RunningNormalizer* norm, int steps) {
    Output out;
    auto view = [&](const Eigen::VectorXd& raw) {
      return norm ? norm->normalize(raw) : raw;
    };
    auto reset = [&] {
      w.raw_obs_ = w.env_->reset(w.rng_());
      w.needs_reset_ = false;
      w.running_ = {};
    };
    try {
      if (w.needs_reset_) reset();
      out.transitions.reserve(steps);
      for (int t = 0; t < steps; ++t) {
        Transition tr;
        tr.raw_observation = w.raw_obs_;
        tr.observation = view(w.raw_obs_);
        const Eigen::VectorXd mu = policy.mean_action(tr.observation);
        const Eigen::VectorXd sd = policy.std();
        std::normal_distribution<double> g(0.0, 1.0);
        tr.action = mu;
        for (int i = 0; i < tr.action.size(); ++i) tr.action(i) += sd(i) * g(w.rng_);
        tr.logp_old = log_prob(mu, sd, tr.action);
        tr.value_old = value.value(tr.observation);

        StepResult r;
        try {
          r = w.env_->step(tr.action);
        } catch (const std::exception& first) {
          spdlog::warn("environment step failed ({}); retrying once", first.what());
          r = w.env_->step(tr.action);
        }
        tr.reward = r.reward;
        tr.done = r.terminal;
        w.running_.total_reward += r.reward;
        ++w.running_.length;
        if (r.terminal) {
          if (r.info.reason == "step_limit") tr.truncation_value = value.value(view(r.observation));
          w.running_.success = r.info.reason == "reached";
          out.episodes.push_back(w.running_);
          out.transitions.push_back(std::move(tr));
          reset();
        } else {
          w.raw_obs_ = r.observation;
          out.transitions.push_back(std::move(tr));
        }
      }
      out.bootstrap = value.value(view(w.raw_obs_));
    } catch (const std::exception& e) {
      out.failed = true;
      out.error = e.what();
      w.needs_reset_ = true;
    }
    return out;
  }
};

RolloutBuffer collect_sync(std::vector<EnvWorker>& workers, const GaussianPolicy& policy,
                           const ValueNet& value, const RunningNormalizer* normalizer,
                           int steps_per_env) {
  if (workers.empty()) throw InvalidArgument("collect_sync needs at least one worker");
  if (steps_per_env < 1) throw InvalidArgument("steps_per_env must be >= 1");
  for (auto& w : workers) {
    if (w.env().obs_dim() != policy.obs_dim() || w.env().act_dim() != policy.act_dim()) {
      throw InvalidArgument("environment and policy dimensions differ");
    }
  }
  std::vector<RolloutCollector::Output> outputs(workers.size());
  if (workers.size() == 1) {
    outputs[0] = RolloutCollector::run(workers[0], policy, value, normalizer, steps_per_env);
  } else {
    std::vector<std::thread> threads;
    threads.reserve(workers.size());
    for (std::size_t e = 0; e < workers.size(); ++e) {
      threads.emplace_back([&, e] {
        outputs[e] = RolloutCollector::run(workers[e], policy, value, normalizer, steps_per_env);
      });
    }
    for (auto& t : threads) t.join();
  }

  RolloutBuffer buf;
  buf.num_envs = static_cast<int>(workers.size());
  buf.steps_per_env = steps_per_env;
  for (std::size_t e = 0; e < outputs.size(); ++e) {
    auto& o = outputs[e];
    if (o.failed) {
      spdlog::warn("dropping rollout of environment {}: {}", e, o.error);
      buf.dropped.push_back(static_cast<int>(e));
      buf.segments.emplace_back();
      buf.bootstrap_values.push_back(0.0);
      continue;
    }
    buf.segments.push_back(std::move(o.transitions));
    buf.bootstrap_values.push_back(o.bootstrap);
    buf.episodes.insert(buf.episodes.end(), o.episodes.begin(), o.episodes.end());
  }
  return buf;
}

}  // namespace myotrack
