#include "myotrack/normalizer.hpp"

#include "myotrack/errors.hpp"

namespace myotrack {
namespace {
constexpr double kVarFloor = 1e-8;
}

RunningNormalizer::RunningNormalizer(int dim, double clip)
    : mean_(Eigen::VectorXd::Zero(dim)), var_(Eigen::VectorXd::Ones(dim)), clip_(clip) {}

void RunningNormalizer::update(const Eigen::MatrixXd& batch) {
  if (batch.rows() != dim()) throw InvalidArgument("normalizer: dimension mismatch");
  const double n = static_cast<double>(batch.cols());
  if (n == 0.0) return;
  const Eigen::VectorXd bmean = batch.rowwise().mean();
  const Eigen::VectorXd bvar = (batch.colwise() - bmean).array().square().rowwise().sum() / n;
  if (count_ == 0.0) {
    mean_ = bmean;
    var_ = bvar;
    count_ = n;
    return;
  }
  const double total = count_ + n;
  const Eigen::VectorXd delta = bmean - mean_;
  mean_ += delta * (n / total);
  var_ = (var_ * count_ + bvar * n + delta.cwiseAbs2() * (count_ * n / total)) / total;
  count_ = total;
}

Eigen::VectorXd RunningNormalizer::normalize(const Eigen::VectorXd& x) const {
  if (x.size() != dim()) throw InvalidArgument("normalizer: dimension mismatch");
  return ((x - mean_).array() / (var_.array() + kVarFloor).sqrt()).cwiseMax(-clip_).cwiseMin(clip_);
}

Eigen::MatrixXd RunningNormalizer::normalize(const Eigen::MatrixXd& batch) const {
  if (batch.rows() != dim()) throw InvalidArgument("normalizer: dimension mismatch");
  const Eigen::ArrayXd inv = (var_.array() + kVarFloor).rsqrt();
  Eigen::MatrixXd out = (batch.colwise() - mean_);
  out.array().colwise() *= inv;
  return out.cwiseMax(-clip_).cwiseMin(clip_);
}

void RunningNormalizer::set_state(Eigen::VectorXd mean, Eigen::VectorXd var, double count) {
  if (mean.size() != var.size()) throw InvalidArgument("normalizer: state size mismatch");
  mean_ = std::move(mean);
  var_ = std::move(var);
  count_ = count;
}

}  // namespace myotrack
