#include "myotrack/adam.hpp"

#include <cmath>

#include "myotrack/errors.hpp"

namespace myotrack {

void adam_step(AdamState& s, Eigen::VectorXd& params, const Eigen::VectorXd& grads, double lr) {
  if (grads.size() != params.size() || s.m.size() != params.size() ||
      s.v.size() != params.size()) {
    throw InvalidArgument("adam_step: shape mismatch");
  }
  ++s.step;
  s.m = s.beta1 * s.m + (1.0 - s.beta1) * grads;
  s.v = s.beta2 * s.v + (1.0 - s.beta2) * grads.cwiseAbs2();
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  params.array() -= lr * (s.m.array() / c1) / ((s.v.array() / c2).sqrt() + s.eps);
}

}  // namespace myotrack
