#pragma once

#include <Eigen/Core>

namespace myotrack {

/// Running mean / variance of observations (parallel-merge update).
class RunningNormalizer {
 public:
  RunningNormalizer() = default;
  explicit RunningNormalizer(int dim, double clip = 10.0);

  int dim() const { return static_cast<int>(mean_.size()); }
  double count() const { return count_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::VectorXd& var() const { return var_; }
  double clip() const { return clip_; }

  /// batch is dim x n
  void update(const Eigen::MatrixXd& batch);
  Eigen::VectorXd normalize(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd normalize(const Eigen::MatrixXd& batch) const;

  void set_state(Eigen::VectorXd mean, Eigen::VectorXd var, double count);

 private:
  Eigen::VectorXd mean_;
  Eigen::VectorXd var_;
  double count_ = 0.0;
  double clip_ = 10.0;
};

}  // namespace myotrack
