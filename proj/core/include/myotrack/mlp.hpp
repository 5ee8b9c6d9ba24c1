#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace myotrack {

inline std::span<const double> as_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}
inline std::span<double> as_span(Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

enum class Activation { kTanh, kIdentity };

/// Fully connected stack. `layer_sizes` = {input, hidden..., output}; the
/// hidden layers use `hidden_activation`, the output layer is linear.
struct MlpSpec {
  std::vector<int> layer_sizes;
  Activation hidden_activation = Activation::kTanh;

  void validate() const;
};

/// Activations kept by a forward pass for the backward pass.
struct MlpCache {
  /// layer inputs, one matrix per layer (features x batch)
  std::vector<Eigen::MatrixXd> inputs;
  /// post-activation outputs of the hidden layers
  std::vector<Eigen::MatrixXd> hidden;
  bool filled() const { return !inputs.empty(); }
};

/// Architecture only; parameters live in a caller-owned flat array laid out
/// per layer as W (out x in, column-major) followed by b.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(MlpSpec spec);

  const MlpSpec& spec() const { return spec_; }
  int input_dim() const { return spec_.layer_sizes.front(); }
  int output_dim() const { return spec_.layer_sizes.back(); }
  int num_layers() const { return static_cast<int>(spec_.layer_sizes.size()) - 1; }
  int num_params() const { return num_params_; }

  /// X is input_dim x batch; returns output_dim x batch.
  Eigen::MatrixXd forward(std::span<const double> params, const Eigen::MatrixXd& X,
                          MlpCache* cache = nullptr) const;

  /// Accumulates dLoss/dparams into `grad` given dLoss/dY. Returns dLoss/dX.
  /// Throws Error if the cache was not filled by forward().
  Eigen::MatrixXd backward(std::span<const double> params, const MlpCache& cache,
                           const Eigen::MatrixXd& dY, std::span<double> grad) const;

  /// Orthogonal init scaled by `hidden_gain` (hidden layers) and
  /// `output_gain` (last layer); zero biases.
  Eigen::VectorXd init_params(std::mt19937_64& rng, double hidden_gain,
                              double output_gain) const;

 private:
  MlpSpec spec_;
  std::vector<int> offsets_;
  int num_params_ = 0;
};

}  // namespace myotrack
