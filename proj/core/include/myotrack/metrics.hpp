#pragma once

#include <vector>

#include <Eigen/Core>

#include "myotrack/chain_model.hpp"
#include "myotrack/spine_env.hpp"

namespace myotrack {

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

/// Population mean and standard deviation (two-pass).
MeanStd mean_std(const std::vector<double>& values);

/// Sum over bodies of the geodesic angle to the target, in degrees.
double pose_error_deg(const ModelState& state, const TargetSpec& target);

std::vector<double> distance_series(const std::vector<ModelState>& trajectory,
                                    const TargetSpec& target);

/// error_c: mean of the per-sample distance (degrees).
double metric_correctness(const std::vector<ModelState>& trajectory, const TargetSpec& target);

/// error_s: population std of the per-sample distance (degrees).
double metric_stability(const std::vector<ModelState>& trajectory, const TargetSpec& target);
double metric_stability(const std::vector<double>& distances);

/// error_t: statistics of |a_t - a_{t-1}|.
MeanStd metric_temporal(const std::vector<Eigen::VectorXd>& activations);

/// error_e: statistics of |a_t|.
MeanStd metric_efficiency(const std::vector<Eigen::VectorXd>& activations);

}  // namespace myotrack
