#include "myotrack/mlp.hpp"

#include <string>

#include <Eigen/QR>

#include "myotrack/errors.hpp"

namespace myotrack {

void MlpSpec::validate() const {
  if (layer_sizes.size() < 3) {
    throw InvalidArgument("MLP needs input, at least one hidden layer, and output");
  }
  for (int w : layer_sizes) {
    if (w <= 0) throw InvalidArgument("MLP layer widths must be positive");
  }
}

Mlp::Mlp(MlpSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  for (int l = 0; l < num_layers(); ++l) {
    offsets_.push_back(num_params_);
    num_params_ += spec_.layer_sizes[l + 1] * (spec_.layer_sizes[l] + 1);
  }
}

namespace {

using ConstMatMap = Eigen::Map<const Eigen::MatrixXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

}  // namespace

Eigen::MatrixXd Mlp::forward(std::span<const double> params, const Eigen::MatrixXd& X,
                             MlpCache* cache) const {
  if (static_cast<int>(params.size()) != num_params_) {
    throw InvalidArgument("MLP parameter count " + std::to_string(params.size()) + " != " +
                          std::to_string(num_params_));
  }
  if (X.rows() != input_dim()) {
    throw InvalidArgument("MLP input dimension " + std::to_string(X.rows()) + " != " +
                          std::to_string(input_dim()));
  }
  if (cache) {
    cache->inputs.clear();
    cache->hidden.clear();
  }
  Eigen::MatrixXd h = X;
  for (int l = 0; l < num_layers(); ++l) {
    const int in = spec_.layer_sizes[l];
    const int out = spec_.layer_sizes[l + 1];
    const ConstMatMap W(params.data() + offsets_[l], out, in);
    const ConstVecMap b(params.data() + offsets_[l] + out * in, out);
    if (cache) cache->inputs.push_back(h);
    Eigen::MatrixXd z = W * h;
    z.colwise() += b;
    if (l + 1 < num_layers()) {
      if (spec_.hidden_activation == Activation::kTanh) z = z.array().tanh().matrix();
      if (cache) cache->hidden.push_back(z);
    }
    h = std::move(z);
  }
  return h;
}

Eigen::MatrixXd Mlp::backward(std::span<const double> params, const MlpCache& cache,
                              const Eigen::MatrixXd& dY, std::span<double> grad) const {
  if (!cache.filled() || static_cast<int>(cache.inputs.size()) != num_layers()) {
    throw Error("MLP backward called without a cached forward pass");
  }
  if (static_cast<int>(grad.size()) != num_params_ ||
      static_cast<int>(params.size()) != num_params_) {
    throw InvalidArgument("MLP gradient buffer has wrong size");
  }
  if (dY.rows() != output_dim() || dY.cols() != cache.inputs.front().cols()) {
    throw InvalidArgument("MLP upstream gradient has wrong shape");
  }
  Eigen::MatrixXd delta = dY;
  for (int l = num_layers() - 1; l >= 0; --l) {
    const int in = spec_.layer_sizes[l];
    const int out = spec_.layer_sizes[l + 1];
    const ConstMatMap W(params.data() + offsets_[l], out, in);
    Eigen::Map<Eigen::MatrixXd> gW(grad.data() + offsets_[l], out, in);
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + offsets_[l] + out * in, out);
    gW.noalias() += delta * cache.inputs[l].transpose();
    gb += delta.rowwise().sum();
    Eigen::MatrixXd upstream = W.transpose() * delta;
    if (l > 0 && spec_.hidden_activation == Activation::kTanh) {
      const Eigen::MatrixXd& a = cache.hidden[l - 1];
      upstream.array() *= 1.0 - a.array().square();
    }
    delta = std::move(upstream);
  }
  return delta;
}

Eigen::VectorXd Mlp::init_params(std::mt19937_64& rng, double hidden_gain,
                                 double output_gain) const {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd params = Eigen::VectorXd::Zero(num_params_);
  for (int l = 0; l < num_layers(); ++l) {
    const int in = spec_.layer_sizes[l];
    const int out = spec_.layer_sizes[l + 1];
    const int big = std::max(in, out);
    Eigen::MatrixXd A(big, big);
    for (int i = 0; i < big; ++i)
      for (int j = 0; j < big; ++j) A(i, j) = g(rng);
    const Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(A).householderQ();
    const double gain = l + 1 < num_layers() ? hidden_gain : output_gain;
    Eigen::Map<Eigen::MatrixXd>(params.data() + offsets_[l], out, in) =
        gain * Q.topLeftCorner(out, in);
  }
  return params;
}

}  // namespace myotrack
