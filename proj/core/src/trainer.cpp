#include "myotrack/trainer.hpp"

#include <algorithm>
#include <deque>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "myotrack/errors.hpp"

namespace myotrack {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

MlpSpec with_hidden(int in, const std::vector<int>& hidden, int out) {
  MlpSpec s;
  s.layer_sizes.push_back(in);
  s.layer_sizes.insert(s.layer_sizes.end(), hidden.begin(), hidden.end());
  s.layer_sizes.push_back(out);
  return s;
}

Checkpoint fresh_checkpoint(const Environment& env, const TrainOptions& o) {
  Checkpoint c;
  const int obs = env.obs_dim();
  const int act = env.act_dim();
  c.policy = o.policy_hidden.empty() ? GaussianPolicy(obs, act, mix_seed(o.seed, 1))
                                     : GaussianPolicy(with_hidden(obs, o.policy_hidden, act),
                                                      mix_seed(o.seed, 1));
  c.value = o.value_hidden.empty() ? ValueNet(obs, mix_seed(o.seed, 2))
                                   : ValueNet(with_hidden(obs, o.value_hidden, 1), mix_seed(o.seed, 2));
  c.policy_adam = AdamState(c.policy.num_params());
  c.value_adam = AdamState(c.value.num_params());
  c.use_normalizer = o.ppo.normalize_observations;
  c.normalizer = RunningNormalizer(obs);
  return c;
}

UpdateBatch flatten(const RolloutBuffer& buf, const PpoConfig& cfg, Eigen::MatrixXd& raw_obs) {
  const Eigen::Index n = static_cast<Eigen::Index>(buf.size());
  UpdateBatch b;
  if (n == 0) return b;
  const auto& first = *std::find_if(buf.segments.begin(), buf.segments.end(),
                                    [](const auto& s) { return !s.empty(); });
  const Eigen::Index od = first.front().observation.size();
  const Eigen::Index ad = first.front().action.size();
  b.obs.resize(od, n);
  b.actions.resize(ad, n);
  b.logp_old.resize(n);
  b.advantages.resize(n);
  b.returns.resize(n);
  raw_obs.resize(od, n);
  Eigen::Index k = 0;
  for (std::size_t e = 0; e < buf.segments.size(); ++e) {
    const auto& seg = buf.segments[e];
    if (seg.empty()) continue;
    const Eigen::Index T = static_cast<Eigen::Index>(seg.size());
    Eigen::VectorXd rewards(T), values(T);
    std::vector<bool> dones(T);
    for (Eigen::Index t = 0; t < T; ++t) {
      rewards(t) = seg[t].reward;
      if (cfg.bootstrap_truncation) rewards(t) += cfg.gamma * seg[t].truncation_value;
      values(t) = seg[t].value_old;
      dones[t] = seg[t].done;
    }
    const GaeResult g =
        compute_gae(rewards, values, dones, buf.bootstrap_values[e], cfg.gamma, cfg.gae_tau);
    for (Eigen::Index t = 0; t < T; ++t, ++k) {
      b.obs.col(k) = seg[t].observation;
      raw_obs.col(k) = seg[t].raw_observation;
      b.actions.col(k) = seg[t].action;
      b.logp_old(k) = seg[t].logp_old;
      b.advantages(k) = g.advantages(t);
      b.returns(k) = g.returns(t);
    }
  }
  return b;
}

void maybe_checkpoint(const Checkpoint& c, const std::string& dir, const std::string& name) {
  if (dir.empty()) return;
  save_checkpoint(c, (std::filesystem::path(dir) / name).string());
}

}  // namespace

TrainResult train(const EnvFactory& factory, const TrainOptions& o,
                  std::optional<Checkpoint> resume) {
  const PpoConfig& cfg = o.ppo;
  cfg.validate();
  if (o.total_steps < 0) throw InvalidArgument("total_steps must be >= 0");

  std::vector<EnvWorker> workers;
  for (int e = 0; e < cfg.num_envs; ++e) {
    workers.emplace_back(factory(e), mix_seed(o.seed, 100 + e + (resume ? resume->updates * 7919 : 0)));
  }
  TrainResult result;
  Checkpoint& c = result.checkpoint;
  c = resume ? std::move(*resume) : fresh_checkpoint(workers.front().env(), o);
  if (c.policy.obs_dim() != workers.front().env().obs_dim() ||
      c.policy.act_dim() != workers.front().env().act_dim()) {
    throw InvalidArgument("checkpoint does not match the environment dimensions");
  }
  std::mt19937_64 shuffle_rng(mix_seed(o.seed, 3 + c.updates));

  const long per_update = static_cast<long>(cfg.num_envs) * cfg.steps_per_env;
  const long n_updates = o.total_steps / per_update;
  std::deque<EpisodeRecord> window;

  for (long u = 0; u < n_updates; ++u) {
    const RolloutBuffer buf = collect_sync(workers, c.policy, c.value,
                                           c.use_normalizer ? &c.normalizer : nullptr,
                                           cfg.steps_per_env);
    for (const auto& ep : buf.episodes) {
      window.push_back(ep);
      if (static_cast<int>(window.size()) > cfg.decay_window) window.pop_front();
    }
    c.env_steps += per_update;

    double success = 0.0, ret = 0.0, len = 0.0;
    for (const auto& ep : window) {
      success += ep.success ? 1.0 : 0.0;
      ret += ep.total_reward;
      len += ep.length;
    }
    const double wn = std::max<double>(1.0, static_cast<double>(window.size()));
    success /= wn;
    if (c.decay_start < 0 && static_cast<int>(window.size()) >= cfg.decay_window &&
        success >= cfg.decay_trigger) {
      c.decay_start = c.env_steps;
      spdlog::info("decay triggered at step {} (success {:.2f})", c.env_steps, success);
    }
    double lr = cfg.lr, eps = cfg.clip_eps;
    if (c.decay_start >= 0) {
      const long remaining = std::max<long>(1, o.total_steps - c.decay_start);
      const double progress =
          std::clamp(static_cast<double>(c.env_steps - c.decay_start) / remaining, 0.0, 1.0);
      lr = std::max(cfg.decay_floor * cfg.lr, linear_decay(cfg.lr, progress));
      eps = std::max(cfg.decay_floor * cfg.clip_eps, linear_decay(cfg.clip_eps, progress));
    }

    Eigen::MatrixXd raw;
    UpdateBatch batch = flatten(buf, cfg, raw);
    UpdateStats stats;
    // Zero learning rate or clip range leaves nothing to optimize.
    if (batch.size() > 0 && lr > 0.0 && eps > 0.0) {
      stats = ppo_update(c.policy, c.value, c.policy_adam, c.value_adam, std::move(batch), cfg,
                         lr, eps, shuffle_rng);
      if (stats.aborted) spdlog::warn("update {} aborted on a non-finite loss", c.updates);
    }
    if (c.use_normalizer && raw.cols() > 0) c.normalizer.update(raw);
    ++c.updates;

    TrainingLogRow row;
    row.step = c.env_steps;
    row.update = c.updates;
    row.episodes = static_cast<int>(buf.episodes.size());
    row.mean_return = ret / wn;
    row.mean_length = len / wn;
    row.success_rate = success;
    row.policy_loss = stats.policy_loss;
    row.value_loss = stats.value_loss;
    row.entropy = stats.entropy;
    row.lr = lr;
    row.eps = eps;
    result.log.push_back(row);

    if (o.checkpoint_every > 0 && c.updates % o.checkpoint_every == 0) {
      maybe_checkpoint(c, o.checkpoint_dir, "ckpt_" + std::to_string(c.updates) + ".json");
    }
  }
  maybe_checkpoint(c, o.checkpoint_dir, "final.json");
  if (!o.log_csv.empty()) write_training_log(result.log, o.log_csv);
  return result;
}

void write_training_log(const std::vector<TrainingLogRow>& rows, const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out.precision(17);
  out << "step,update,episodes,mean_return,mean_length,success_rate,policy_loss,value_loss,"
         "entropy,lr,eps\n";
  for (const auto& r : rows) {
    out << r.step << ',' << r.update << ',' << r.episodes << ',' << r.mean_return << ','
        << r.mean_length << ',' << r.success_rate << ',' << r.policy_loss << ',' << r.value_loss
        << ',' << r.entropy << ',' << r.lr << ',' << r.eps << '\n';
  }
}

std::vector<TrainingLogRow> read_training_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::string line;
  std::getline(in, line);
  std::vector<TrainingLogRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    TrainingLogRow r;
    ss >> r.step >> r.update >> r.episodes >> r.mean_return >> r.mean_length >> r.success_rate >>
        r.policy_loss >> r.value_loss >> r.entropy >> r.lr >> r.eps;
    if (!ss) throw Error("malformed training log row in " + path + ": " + line);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace myotrack
