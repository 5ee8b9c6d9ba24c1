#pragma once

#include <Eigen/Core>

namespace myotrack {

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  AdamState() = default;
  explicit AdamState(Eigen::Index n) : m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)) {}
};

/// One bias-corrected Adam update of `params` in place (descent on grads).
void adam_step(AdamState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grads, double lr);

}  // namespace myotrack
