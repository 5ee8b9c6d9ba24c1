#pragma once

#include <Eigen/Core>

#include "myotrack/errors.hpp"

namespace myotrack {

/// Find z >= 0 with w = M z + q >= 0 and z^T w = 0.
struct LcpProblem {
  Eigen::MatrixXd M;
  Eigen::VectorXd q;
};

struct LcpOptions {
  /// 0 selects 10 * 2^min(n, 16).
  long max_pivots = 0;
  double tol = 1e-10;
  /// Pivot elements smaller than this in magnitude are refused.
  double pivot_floor = 1e-12;
};

struct LcpSolution {
  Eigen::VectorXd z;
  Eigen::VectorXd w;
  long pivots = 0;
};

struct LcpCertificate {
  /// max_i |min(z_i, w_i)|
  double complementarity = 0.0;
  /// min over all z_i, w_i (negative means infeasible)
  double min_value = 0.0;
  /// ||w - (M z + q)||_inf
  double equation_residual = 0.0;

  bool ok(double tol) const {
    return complementarity <= tol && min_value >= -tol && equation_residual <= tol;
  }
};

LcpCertificate certify(const LcpProblem& problem, const Eigen::VectorXd& z,
                       const Eigen::VectorXd& w);

/// Pivot budget exhausted. Carries the last basic iterate.
class LcpNonConvergence : public SolverError {
 public:
  LcpNonConvergence(const std::string& what, Eigen::VectorXd best_z, long pivots)
      : SolverError(what), best_z_(std::move(best_z)), pivots_(pivots) {}
  const Eigen::VectorXd& best_z() const { return best_z_; }
  long pivots() const { return pivots_; }

 private:
  Eigen::VectorXd best_z_;
  long pivots_;
};

class LcpDegeneratePivot : public SolverError {
 public:
  using SolverError::SolverError;
};

/// The ray termination: no feasible point exists along the driving direction.
class LcpInfeasible : public SolverError {
 public:
  using SolverError::SolverError;
};

long default_max_pivots(int n);

/// Dantzig-Cottle principal pivoting for positive semi-definite M.
///
/// Each major cycle picks the lowest-index negative basic variable as the
/// distinguished variable and drives its complement up. A blocking basic
/// variable is exchanged for the driving variable and its own complement
/// becomes the new driving variable; the cycle closes when the distinguished
/// variable itself blocks. Ratio ties go to the distinguished variable, then
/// to the lowest pair index.
///
/// The returned solution is re-solved from its final complementary basis and
/// its certificate is checked against `tol`; a failed certificate throws.
LcpSolution solve_lcp_ppm(const LcpProblem& problem, const LcpOptions& options = {});

}  // namespace myotrack
