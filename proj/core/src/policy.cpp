#include "myotrack/policy.hpp"

#include <cmath>
#include <numbers>

#include "myotrack/errors.hpp"

namespace myotrack {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // ln(2 pi)
constexpr double kHiddenGain = std::numbers::sqrt2;
constexpr double kPolicyHeadGain = 0.01;
constexpr double kValueHeadGain = 1.0;

}  // namespace

double log_prob(const Eigen::VectorXd& mean, const Eigen::VectorXd& std,
                const Eigen::VectorXd& action) {
  if (mean.size() != std.size() || mean.size() != action.size()) {
    throw InvalidArgument("log_prob: dimension mismatch");
  }
  const Eigen::ArrayXd z = (action - mean).array() / std.array();
  return (-0.5 * z.square() - std.array().log() - 0.5 * kLog2Pi).sum();
}

double entropy(const Eigen::VectorXd& std) {
  return (0.5 * (1.0 + kLog2Pi) + std.array().log()).sum();
}

MlpSpec default_policy_spec(int obs_dim, int act_dim) {
  return {{obs_dim, 32, 64, 128, 256, act_dim}, Activation::kTanh};
}

MlpSpec default_value_spec(int obs_dim) { return {{obs_dim, 64, 64, 1}, Activation::kTanh}; }

GaussianPolicy::GaussianPolicy(int obs_dim, int act_dim, std::uint64_t seed)
    : GaussianPolicy(default_policy_spec(obs_dim, act_dim), seed) {}

GaussianPolicy::GaussianPolicy(MlpSpec spec, std::uint64_t seed) : net_(std::move(spec)) {
  std::mt19937_64 rng(seed);
  params_.resize(net_.num_params() + net_.output_dim());
  params_.head(net_.num_params()) = net_.init_params(rng, kHiddenGain, kPolicyHeadGain);
  params_.tail(net_.output_dim()).setConstant(kInitialLogStd);
}

Eigen::MatrixXd GaussianPolicy::mean(const Eigen::MatrixXd& obs, MlpCache* cache) const {
  return net_.forward(net_params(), obs, cache);
}

Eigen::VectorXd GaussianPolicy::mean_action(const Eigen::VectorXd& obs) const {
  return net_.forward(net_params(), obs).col(0);
}

Eigen::VectorXd GaussianPolicy::sample(const Eigen::VectorXd& obs, std::mt19937_64& rng) const {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd a = mean_action(obs);
  const Eigen::VectorXd s = std();
  for (int i = 0; i < a.size(); ++i) a(i) += s(i) * g(rng);
  return a;
}

ValueNet::ValueNet(int obs_dim, std::uint64_t seed) : ValueNet(default_value_spec(obs_dim), seed) {}

ValueNet::ValueNet(MlpSpec spec, std::uint64_t seed) : net_(std::move(spec)) {
  if (net_.output_dim() != 1) throw InvalidArgument("value network must have one output");
  std::mt19937_64 rng(seed);
  params_ = net_.init_params(rng, kHiddenGain, kValueHeadGain);
}

Eigen::VectorXd ValueNet::value(const Eigen::MatrixXd& obs, MlpCache* cache) const {
  return net_.forward(as_span(params_), obs, cache).row(0).transpose();
}

double ValueNet::value(const Eigen::VectorXd& obs) const {
  return net_.forward(as_span(params_), obs)(0, 0);
}

}  // namespace myotrack
