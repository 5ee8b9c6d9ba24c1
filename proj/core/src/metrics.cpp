#include "myotrack/metrics.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "myotrack/errors.hpp"

namespace myotrack {

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd out;
  if (values.empty()) return out;
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(ss / static_cast<double>(values.size()));
  return out;
}

double pose_error_deg(const ModelState& state, const TargetSpec& target) {
  if (state.poses.size() != target.orientations.size()) {
    throw InvalidArgument("target has " + std::to_string(target.orientations.size()) +
                          " bodies, state has " + std::to_string(state.poses.size()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < state.poses.size(); ++i) {
    sum += geodesic_angle(state.poses[i].orientation, target.orientations[i]);
  }
  return sum * 180.0 / std::numbers::pi;
}

std::vector<double> distance_series(const std::vector<ModelState>& trajectory,
                                    const TargetSpec& target) {
  std::vector<double> out;
  out.reserve(trajectory.size());
  for (const ModelState& s : trajectory) out.push_back(pose_error_deg(s, target));
  return out;
}

double metric_correctness(const std::vector<ModelState>& trajectory, const TargetSpec& target) {
  if (trajectory.empty()) throw InvalidArgument("trajectory is empty");
  return mean_std(distance_series(trajectory, target)).mean;
}

double metric_stability(const std::vector<double>& distances) {
  if (distances.size() < 2) throw InvalidArgument("stability needs at least 2 samples");
  return mean_std(distances).std;
}

double metric_stability(const std::vector<ModelState>& trajectory, const TargetSpec& target) {
  return metric_stability(distance_series(trajectory, target));
}

MeanStd metric_temporal(const std::vector<Eigen::VectorXd>& activations) {
  if (activations.size() < 2) throw InvalidArgument("temporal metric needs at least 2 vectors");
  std::vector<double> diffs;
  diffs.reserve(activations.size() - 1);
  for (std::size_t t = 1; t < activations.size(); ++t) {
    diffs.push_back((activations[t] - activations[t - 1]).norm());
  }
  return mean_std(diffs);
}

MeanStd metric_efficiency(const std::vector<Eigen::VectorXd>& activations) {
  if (activations.empty()) throw InvalidArgument("efficiency metric needs at least 1 vector");
  std::vector<double> norms;
  norms.reserve(activations.size());
  for (const auto& a : activations) norms.push_back(a.norm());
  return mean_std(norms);
}

}  // namespace myotrack
