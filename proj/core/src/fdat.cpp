#include "myotrack/fdat.hpp"

#include <chrono>
#include <string>

#include <Eigen/Cholesky>
#include <spdlog/spdlog.h>

namespace myotrack {

void CostWeights::validate() const {
  if (!(w_u >= 0.0 && w_d >= 0.0 && w_r > 0.0)) {
    throw InvalidArgument("cost weights need w_u >= 0, w_d >= 0, w_r > 0");
  }
  if (!(delta_t > 0.0)) throw InvalidArgument("delta_t must be positive");
}

BoxedQp assemble_qp(const Eigen::MatrixXd& lambda, const Eigen::VectorXd& u0,
                    const Eigen::VectorXd& target, const Eigen::VectorXd& a_prev,
                    const CostWeights& w) {
  w.validate();
  const Eigen::Index n = lambda.cols();
  if (u0.size() != lambda.rows() || target.size() != lambda.rows() || a_prev.size() != n) {
    throw InvalidArgument("assemble_qp: dimension mismatch");
  }
  const double wu = w.w_u / w.delta_t;
  BoxedQp qp;
  qp.H = wu * lambda.transpose() * lambda;
  qp.H.diagonal().array() += w.w_d + w.w_r;
  qp.f = wu * lambda.transpose() * (u0 - target) - w.w_d * a_prev;
  qp.lower = Eigen::VectorXd::Zero(n);
  qp.upper = Eigen::VectorXd::Ones(n);
  return qp;
}

double tracking_cost(const Eigen::MatrixXd& lambda, const Eigen::VectorXd& u0,
                     const Eigen::VectorXd& target, const Eigen::VectorXd& a,
                     const Eigen::VectorXd& a_prev, const CostWeights& w) {
  const double phi_u = (u0 + lambda * a - target).squaredNorm() / (2.0 * w.delta_t);
  const double phi_d = 0.5 * (a - a_prev).squaredNorm();
  const double phi_r = 0.5 * a.squaredNorm();
  return w.w_u * phi_u + w.w_d * phi_d + w.w_r * phi_r;
}

Eigen::VectorXd QpLcp::recover(const Eigen::VectorXd& z) const {
  const Eigen::Index n = lower.size();
  return (lower + z.head(n)).cwiseMax(lower).cwiseMin(upper);
}

QpLcp qp_to_lcp(const BoxedQp& qp) {
  const Eigen::Index n = qp.f.size();
  if (qp.H.rows() != n || qp.H.cols() != n || qp.lower.size() != n || qp.upper.size() != n) {
    throw InvalidArgument("qp_to_lcp: dimension mismatch");
  }
  if ((qp.upper - qp.lower).minCoeff() < 0.0) throw InvalidArgument("qp_to_lcp: empty box");
  const double scale = std::max(1.0, qp.H.lpNorm<Eigen::Infinity>());
  if (!qp.H.isApprox(qp.H.transpose(), 1e-12 * scale)) {
    throw InvalidArgument("qp_to_lcp: H is not symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(qp.H);
  if (llt.info() != Eigen::Success) {
    throw InvalidArgument("qp_to_lcp: H is not positive definite");
  }
  QpLcp out;
  out.lower = qp.lower;
  out.upper = qp.upper;
  auto& M = out.problem.M;
  M = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  M.topLeftCorner(n, n) = qp.H;
  M.topRightCorner(n, n).setIdentity();
  M.bottomLeftCorner(n, n) = -Eigen::MatrixXd::Identity(n, n);
  out.problem.q.resize(2 * n);
  out.problem.q << qp.f + qp.H * qp.lower, qp.upper - qp.lower;
  return out;
}

BoxedQpSolution solve_boxed_qp(const BoxedQp& qp, const LcpOptions& options) {
  const QpLcp reduced = qp_to_lcp(qp);
  const LcpSolution sol = solve_lcp_ppm(reduced.problem, options);
  return {reduced.recover(sol.z), sol.pivots};
}

ActivationSolution solve_fdat_step(const ChainModel& model, const ModelState& state,
                                   const Eigen::VectorXd& target, const Eigen::VectorXd& a_prev,
                                   const CostWeights& weights, const FdatOptions& options) {
  const std::span<const double> prev(a_prev.data(), static_cast<std::size_t>(a_prev.size()));
  const Sensitivity sens =
      sensitivity(model, state, prev, options.dt, options.include_positions);
  if (target.size() != sens.u0.size()) {
    throw InvalidArgument("target feature length " + std::to_string(target.size()) +
                          " != " + std::to_string(sens.u0.size()));
  }
  const BoxedQp qp = assemble_qp(sens.lambda, sens.u0, target, a_prev, weights);
  ActivationSolution out;
  try {
    const BoxedQpSolution sol = solve_boxed_qp(qp, options.lcp);
    out.a = sol.a;
    out.pivots = sol.pivots;
    out.converged = true;
  } catch (const SolverError& e) {
    spdlog::warn("FDAT solve failed ({}); holding previous activations", e.what());
    out.a = a_prev.cwiseMax(0.0).cwiseMin(1.0);
    out.converged = false;
    if (const auto* nc = dynamic_cast<const LcpNonConvergence*>(&e)) out.pivots = nc->pivots();
  }
  out.objective = tracking_cost(sens.lambda, sens.u0, target, out.a, a_prev, weights);
  return out;
}

TrackingResult track_trajectory(const ChainModel& model, const ModelState& initial,
                                const TargetSchedule& schedule, const CostWeights& weights,
                                int n_steps, const FdatOptions& options) {
  if (n_steps < 1) throw InvalidArgument("track_trajectory needs n_steps >= 1");
  TrackingResult out;
  out.states.reserve(n_steps + 1);
  out.states.push_back(initial);
  Eigen::VectorXd a_prev = Eigen::VectorXd::Zero(model.num_muscles());
  for (int k = 0; k < n_steps; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    const ActivationSolution sol =
        solve_fdat_step(model, out.states.back(), schedule(k), a_prev, weights, options);
    const auto t1 = std::chrono::steady_clock::now();
    out.solve_seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
    out.pivots.push_back(sol.pivots);
    out.activations.push_back(sol.a);
    out.states.push_back(step(model, out.states.back(),
                              std::span<const double>(sol.a.data(), sol.a.size()), options.dt));
    a_prev = sol.a;
  }
  return out;
}

}  // namespace myotrack
