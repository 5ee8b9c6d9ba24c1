#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

#include "myotrack/chain_model.hpp"
#include "myotrack/dynamics.hpp"
#include "myotrack/lcp.hpp"

namespace myotrack {

/// Weights of the tracking cost
///   w_u/(2 dT) ||u - u*||^2 + w_d/2 ||a - a_prev||^2 + w_r/2 ||a||^2.
/// Only ratios matter. With quaternion features and a 10 ms probe step the
/// desk models need w_u around 1e3 for the tracking term to outweigh w_r.
struct CostWeights {
  double w_u = 1.0;
  double w_d = 0.001;
  double w_r = 0.01;
  /// Expected time to reach the target, s.
  double delta_t = 0.1;

  void validate() const;
};

/// minimize 0.5 a^T H a + f^T a  subject to  lower <= a <= upper
struct BoxedQp {
  Eigen::MatrixXd H;
  Eigen::VectorXd f;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  double objective(const Eigen::VectorXd& a) const { return 0.5 * a.dot(H * a) + f.dot(a); }
};

BoxedQp assemble_qp(const Eigen::MatrixXd& lambda, const Eigen::VectorXd& u0,
                    const Eigen::VectorXd& target, const Eigen::VectorXd& a_prev,
                    const CostWeights& weights);

/// Tracking cost of `a` under the affine prediction u = u0 + lambda a.
double tracking_cost(const Eigen::MatrixXd& lambda, const Eigen::VectorXd& u0,
                     const Eigen::VectorXd& target, const Eigen::VectorXd& a,
                     const Eigen::VectorXd& a_prev, const CostWeights& weights);

/// KKT system of a box QP as an LCP over z = [a - lower; mu]:
///   w = [H  I; -I 0] z + [f + H lower; upper - lower]
/// The first block of w is the lower-bound multiplier, mu the upper-bound one.
struct QpLcp {
  LcpProblem problem;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Eigen::VectorXd recover(const Eigen::VectorXd& z) const;
};

/// Throws InvalidArgument unless H is symmetric positive definite.
QpLcp qp_to_lcp(const BoxedQp& qp);

struct BoxedQpSolution {
  Eigen::VectorXd a;
  long pivots = 0;
};

BoxedQpSolution solve_boxed_qp(const BoxedQp& qp, const LcpOptions& options = {});

struct ActivationSolution {
  Eigen::VectorXd a;
  double objective = 0.0;
  long pivots = 0;
  bool converged = false;
};

struct FdatOptions {
  double dt = kDefaultTimestep;
  bool include_positions = false;
  LcpOptions lcp;
};

/// One inverse-dynamics solve: probe the sensitivity, assemble the QP, solve
/// it as an LCP. On solver failure, returns the clamped previous activation
/// with converged = false.
ActivationSolution solve_fdat_step(const ChainModel& model, const ModelState& state,
                                   const Eigen::VectorXd& target, const Eigen::VectorXd& a_prev,
                                   const CostWeights& weights, const FdatOptions& options = {});

using TargetSchedule = std::function<Eigen::VectorXd(int step)>;

struct TrackingResult {
  /// states[0] is the initial state; states[k + 1] follows activations[k].
  std::vector<ModelState> states;
  std::vector<Eigen::VectorXd> activations;
  std::vector<double> solve_seconds;
  std::vector<long> pivots;
};

TrackingResult track_trajectory(const ChainModel& model, const ModelState& initial,
                                const TargetSchedule& schedule, const CostWeights& weights,
                                int n_steps, const FdatOptions& options = {});

}  // namespace myotrack
