#include "myotrack/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "myotrack/errors.hpp"

namespace myotrack {

void PpoConfig::validate() const {
  if (!(clip_eps > 0.0 && clip_eps < 1.0)) throw InvalidArgument("clip_eps must lie in (0, 1)");
  if (!(stab_beta > 0.0)) throw InvalidArgument("stab_beta must be positive");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw InvalidArgument("gamma must lie in (0, 1]");
  if (!(gae_tau >= 0.0 && gae_tau <= 1.0)) throw InvalidArgument("gae_tau must lie in [0, 1]");
  if (!(lr > 0.0)) throw InvalidArgument("lr must be positive");
  if (minibatch_size < 1 || steps_per_env < 1 || epochs < 1 || num_envs < 1) {
    throw InvalidArgument("minibatch_size, steps_per_env, epochs and num_envs must be >= 1");
  }
  if (!(decay_floor >= 0.0 && decay_floor <= 1.0)) {
    throw InvalidArgument("decay_floor must lie in [0, 1]");
  }
  if (decay_window < 1) throw InvalidArgument("decay_window must be >= 1");
  if (!(min_log_std <= max_log_std)) throw InvalidArgument("min_log_std must not exceed max_log_std");
}

GaeResult compute_gae(const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
                      const std::vector<bool>& dones, double bootstrap_value, double gamma,
                      double tau) {
  const Eigen::Index T = rewards.size();
  if (values.size() != T || static_cast<Eigen::Index>(dones.size()) != T) {
    throw InvalidArgument("compute_gae: length mismatch");
  }
  GaeResult out;
  out.advantages.resize(T);
  double next_value = bootstrap_value;
  double next_adv = 0.0;
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    const double live = dones[t] ? 0.0 : 1.0;
    const double delta = rewards(t) + gamma * next_value * live - values(t);
    next_adv = delta + gamma * tau * live * next_adv;
    out.advantages(t) = next_adv;
    next_value = values(t);
  }
  out.returns = out.advantages + values;
  return out;
}

double clipped_objective(double r, double a, double eps, double beta) {
  if (a >= 0.0) return std::min(r * a, std::clamp(r, 1.0 - eps, 1.0 + eps) * a);
  return std::clamp(r, 1.0 - eps, 1.0 + beta) * a;
}

double clipped_objective_slope(double r, double a, double eps, double beta) {
  if (a >= 0.0) return r < 1.0 + eps ? a : 0.0;
  return (r > 1.0 - eps && r < 1.0 + beta) ? a : 0.0;
}

double linear_decay(double initial, double progress) {
  if (!(progress >= 0.0 && progress <= 1.0)) {
    throw InvalidArgument("decay progress must lie in [0, 1]");
  }
  return initial * (1.0 - progress);
}

void normalize_advantages(Eigen::VectorXd& adv) {
  if (adv.size() == 0) return;
  const double mean = adv.mean();
  adv.array() -= mean;
  const double sd = std::sqrt(adv.squaredNorm() / static_cast<double>(adv.size()));
  if (sd > 1e-12) adv /= sd;
}

PolicyLoss policy_loss(const GaussianPolicy& policy, const Minibatch& b, double eps, double beta,
                       double entropy_coef, bool with_grad) {
  const Eigen::Index B = b.logp_old.size();
  const int act = policy.act_dim();
  if (b.obs.cols() != B || b.actions.cols() != B || b.advantages.size() != B ||
      b.actions.rows() != act) {
    throw InvalidArgument("policy_loss: minibatch shape mismatch");
  }
  MlpCache cache;
  const Eigen::MatrixXd mu = policy.mean(b.obs, with_grad ? &cache : nullptr);
  const Eigen::ArrayXd log_std = policy.log_std();
  const Eigen::ArrayXd inv_var = (-2.0 * log_std).exp();
  const Eigen::VectorXd sd = log_std.exp();

  PolicyLoss out;
  out.ratios.resize(B);
  const Eigen::MatrixXd diff = b.actions - mu;
  Eigen::VectorXd weight(B);  // d objective_i / d logp_i
  double total = 0.0;
  int clipped = 0;
  for (Eigen::Index i = 0; i < B; ++i) {
    const double logp = log_prob(mu.col(i), sd, b.actions.col(i));
    const double r = std::exp(logp - b.logp_old(i));
    out.ratios(i) = r;
    const double a = b.advantages(i);
    total += clipped_objective(r, a, eps, beta);
    const double slope = clipped_objective_slope(r, a, eps, beta);
    if (slope == 0.0 && a != 0.0) ++clipped;
    weight(i) = slope * r;
  }
  out.surrogate = total / static_cast<double>(B);
  out.entropy = entropy(sd);
  out.loss = -(out.surrogate + entropy_coef * out.entropy);
  out.clip_fraction = static_cast<double>(clipped) / static_cast<double>(B);
  if (!with_grad) return out;

  out.grad = Eigen::VectorXd::Zero(policy.num_params());
  const double scale = -1.0 / static_cast<double>(B);
  // d logp / d mu = (a - mu) / var
  Eigen::MatrixXd d_mu = diff.array().colwise() * inv_var;
  d_mu.array().rowwise() *= (scale * weight.transpose().array());
  const int net_n = policy.net().num_params();
  policy.net().backward(policy.net_params(), cache, d_mu,
                        std::span<double>(out.grad.data(), std::size_t(net_n)));
  // d logp / d log_std = z^2 - 1
  const Eigen::MatrixXd z2 = diff.array().square().colwise() * inv_var;
  for (int d = 0; d < act; ++d) {
    const double g = ((z2.row(d).array() - 1.0) * weight.transpose().array()).sum();
    out.grad(net_n + d) = scale * g - entropy_coef;
  }
  return out;
}

ValueLoss value_loss(const ValueNet& value, const Minibatch& b, double value_coef,
                     bool with_grad) {
  const Eigen::Index B = b.returns.size();
  if (b.obs.cols() != B) throw InvalidArgument("value_loss: minibatch shape mismatch");
  MlpCache cache;
  const Eigen::VectorXd v = value.value(b.obs, with_grad ? &cache : nullptr);
  const Eigen::VectorXd err = v - b.returns;
  ValueLoss out;
  out.loss = value_coef * err.squaredNorm() / static_cast<double>(B);
  if (!with_grad) return out;
  out.grad = Eigen::VectorXd::Zero(value.num_params());
  const Eigen::MatrixXd dv = (2.0 * value_coef / static_cast<double>(B)) * err.transpose();
  value.net().backward(as_span(value.params()), cache, dv, as_span(out.grad));
  return out;
}

namespace {

void clip_grad_norm(Eigen::VectorXd& g, double max_norm) {
  if (max_norm <= 0.0) return;
  const double n = g.norm();
  if (n > max_norm) g *= max_norm / n;
}

Minibatch gather(const UpdateBatch& b, const std::vector<Eigen::Index>& order, Eigen::Index begin,
                 Eigen::Index count) {
  Minibatch m;
  m.obs.resize(b.obs.rows(), count);
  m.actions.resize(b.actions.rows(), count);
  m.logp_old.resize(count);
  m.advantages.resize(count);
  m.returns.resize(count);
  for (Eigen::Index k = 0; k < count; ++k) {
    const Eigen::Index i = order[begin + k];
    m.obs.col(k) = b.obs.col(i);
    m.actions.col(k) = b.actions.col(i);
    m.logp_old(k) = b.logp_old(i);
    m.advantages(k) = b.advantages(i);
    m.returns(k) = b.returns(i);
  }
  return m;
}

}  // namespace

UpdateStats ppo_update(GaussianPolicy& policy, ValueNet& value, AdamState& policy_adam,
                       AdamState& value_adam, UpdateBatch batch, const PpoConfig& config,
                       double lr, double clip_eps, std::mt19937_64& rng) {
  const Eigen::Index N = batch.size();
  if (N == 0) throw InvalidArgument("ppo_update: empty batch");
  normalize_advantages(batch.advantages);

  const Eigen::VectorXd policy_backup = policy.params();
  const Eigen::VectorXd value_backup = value.params();
  const AdamState policy_adam_backup = policy_adam;
  const AdamState value_adam_backup = value_adam;

  std::vector<Eigen::Index> order(N);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  UpdateStats stats;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index begin = 0; begin < N; begin += config.minibatch_size) {
      const Eigen::Index count = std::min<Eigen::Index>(config.minibatch_size, N - begin);
      const Minibatch mb = gather(batch, order, begin, count);
      PolicyLoss pl =
          policy_loss(policy, mb, clip_eps, config.stab_beta, config.entropy_coef);
      ValueLoss vl = value_loss(value, mb, config.value_coef);
      if (!std::isfinite(pl.loss) || !std::isfinite(vl.loss) || !pl.grad.allFinite() ||
          !vl.grad.allFinite()) {
        policy.params() = policy_backup;
        value.params() = value_backup;
        policy_adam = policy_adam_backup;
        value_adam = value_adam_backup;
        stats.aborted = true;
        return stats;
      }
      if (stats.minibatches == 0) {
        stats.first_ratio_deviation = (pl.ratios.array() - 1.0).abs().maxCoeff();
      }
      clip_grad_norm(pl.grad, config.max_grad_norm);
      clip_grad_norm(vl.grad, config.max_grad_norm);
      adam_step(policy_adam, policy.params(), pl.grad, lr);
      auto log_std = policy.params().tail(policy.act_dim());
      log_std = log_std.cwiseMax(config.min_log_std).cwiseMin(config.max_log_std);
      adam_step(value_adam, value.params(), vl.grad, lr);
      stats.policy_loss += pl.loss;
      stats.value_loss += vl.loss;
      stats.entropy += pl.entropy;
      stats.clip_fraction += pl.clip_fraction;
      ++stats.minibatches;
    }
  }
  const double n = stats.minibatches;
  stats.policy_loss /= n;
  stats.value_loss /= n;
  stats.entropy /= n;
  stats.clip_fraction /= n;
  return stats;
}

}  // namespace myotrack
