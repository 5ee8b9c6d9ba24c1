#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

#include "myotrack/mlp.hpp"

namespace myotrack {

/// Sum over dimensions of the diagonal-Gaussian log density.
double log_prob(const Eigen::VectorXd& mean, const Eigen::VectorXd& std,
                const Eigen::VectorXd& action);

/// Diagonal-Gaussian entropy: sum of 0.5 (1 + ln 2 pi) + ln std.
double entropy(const Eigen::VectorXd& std);

/// Mean network (tanh MLP with a linear head) plus a state-independent
/// log standard deviation. Parameters: mean-net weights, then log_std.
class GaussianPolicy {
 public:
  static constexpr double kInitialLogStd = -1.0;

  GaussianPolicy() = default;
  /// Hidden widths 32, 64, 128, 256.
  GaussianPolicy(int obs_dim, int act_dim, std::uint64_t seed);
  GaussianPolicy(MlpSpec spec, std::uint64_t seed);

  int obs_dim() const { return net_.input_dim(); }
  int act_dim() const { return net_.output_dim(); }
  int num_params() const { return static_cast<int>(params_.size()); }
  const Mlp& net() const { return net_; }

  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }
  std::span<const double> net_params() const { return {params_.data(), std::size_t(net_.num_params())}; }
  Eigen::Map<const Eigen::VectorXd> log_std() const {
    return {params_.data() + net_.num_params(), act_dim()};
  }
  Eigen::VectorXd std() const { return log_std().array().exp(); }

  /// obs is obs_dim x batch; returns act_dim x batch means.
  Eigen::MatrixXd mean(const Eigen::MatrixXd& obs, MlpCache* cache = nullptr) const;
  Eigen::VectorXd mean_action(const Eigen::VectorXd& obs) const;
  Eigen::VectorXd sample(const Eigen::VectorXd& obs, std::mt19937_64& rng) const;

 private:
  Mlp net_;
  Eigen::VectorXd params_;
};

/// Separate critic; hidden widths 64, 64.
class ValueNet {
 public:
  ValueNet() = default;
  ValueNet(int obs_dim, std::uint64_t seed);
  ValueNet(MlpSpec spec, std::uint64_t seed);

  int obs_dim() const { return net_.input_dim(); }
  int num_params() const { return static_cast<int>(params_.size()); }
  const Mlp& net() const { return net_; }
  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }

  Eigen::VectorXd value(const Eigen::MatrixXd& obs, MlpCache* cache = nullptr) const;
  double value(const Eigen::VectorXd& obs) const;

 private:
  Mlp net_;
  Eigen::VectorXd params_;
};

MlpSpec default_policy_spec(int obs_dim, int act_dim);
MlpSpec default_value_spec(int obs_dim);

}  // namespace myotrack
