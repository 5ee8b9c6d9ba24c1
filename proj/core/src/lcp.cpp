#include "myotrack/lcp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/LU>

namespace myotrack {
namespace {

// Variables 0..n-1 are w, n..2n-1 are z.
class Tableau {
 public:
  explicit Tableau(const LcpProblem& p) : n_(static_cast<int>(p.q.size())) {
    table_.resize(n_, 2 * n_);
    table_.leftCols(n_).setIdentity();
    table_.rightCols(n_) = -p.M;
    rhs_ = p.q;
    basic_.resize(n_);
    for (int i = 0; i < n_; ++i) basic_[i] = i;
  }

  int size() const { return n_; }
  int basic(int row) const { return basic_[row]; }
  double value(int row) const { return rhs_[row]; }
  int pair(int var) const { return var % n_; }
  int complement(int var) const { return var < n_ ? var + n_ : var - n_; }

  /// Rate of change of each basic variable per unit increase of `var`.
  Eigen::VectorXd direction(int var) const { return -table_.col(var); }

  void pivot(int row, int entering) {
    const double p = table_(row, entering);
    table_.row(row) /= p;
    rhs_[row] /= p;
    for (int i = 0; i < n_; ++i) {
      if (i == row) continue;
      const double f = table_(i, entering);
      if (f == 0.0) continue;
      table_.row(i) -= f * table_.row(row);
      rhs_[i] -= f * rhs_[row];
    }
    basic_[row] = entering;
  }

  double element(int row, int var) const { return table_(row, var); }

  /// z of the current basis (nonbasic variables at zero).
  Eigen::VectorXd z() const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_);
    for (int i = 0; i < n_; ++i) {
      if (basic_[i] >= n_) out[basic_[i] - n_] = rhs_[i];
    }
    return out;
  }

  std::vector<int> basic_z_pairs() const {
    std::vector<int> out;
    for (int i = 0; i < n_; ++i) {
      if (basic_[i] >= n_) out.push_back(basic_[i] - n_);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  int n_;
  Eigen::MatrixXd table_;
  Eigen::VectorXd rhs_;
  std::vector<int> basic_;
};

// Solve the principal system of the final complementary basis directly to
// strip the round-off accumulated over the pivots.
Eigen::VectorXd refine(const LcpProblem& p, const std::vector<int>& active) {
  const int n = static_cast<int>(p.q.size());
  Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
  const int k = static_cast<int>(active.size());
  if (k == 0) return z;
  Eigen::MatrixXd mjj(k, k);
  Eigen::VectorXd qj(k);
  for (int a = 0; a < k; ++a) {
    qj[a] = p.q[active[a]];
    for (int b = 0; b < k; ++b) mjj(a, b) = p.M(active[a], active[b]);
  }
  const Eigen::VectorXd zj = mjj.partialPivLu().solve(-qj);
  for (int a = 0; a < k; ++a) z[active[a]] = zj[a];
  return z;
}

}  // namespace

long default_max_pivots(int n) { return 10L * (1L << std::min(n, 16)); }

LcpCertificate certify(const LcpProblem& p, const Eigen::VectorXd& z, const Eigen::VectorXd& w) {
  LcpCertificate c;
  c.equation_residual = (w - (p.M * z + p.q)).lpNorm<Eigen::Infinity>();
  c.min_value = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    c.complementarity = std::max(c.complementarity, std::abs(std::min(z[i], w[i])));
    c.min_value = std::min({c.min_value, z[i], w[i]});
  }
  if (z.size() == 0) c.min_value = 0.0;
  return c;
}

LcpSolution solve_lcp_ppm(const LcpProblem& problem, const LcpOptions& options) {
  const int n = static_cast<int>(problem.q.size());
  if (problem.M.rows() != n || problem.M.cols() != n) {
    throw InvalidArgument("LCP matrix must be " + std::to_string(n) + "x" + std::to_string(n));
  }
  if (!(options.tol > 0.0)) throw InvalidArgument("LCP tolerance must be positive");
  const long max_pivots = options.max_pivots > 0 ? options.max_pivots : default_max_pivots(n);
  // Values within this band of zero count as zero in sign tests.
  const double zero_band = options.tol * std::max(1.0, problem.q.lpNorm<Eigen::Infinity>()) * 1e-3;
  const double rate_eps = 1e-14 * std::max(1.0, problem.M.lpNorm<Eigen::Infinity>());

  Tableau t(problem);
  long pivots = 0;

  for (;;) {
    // Distinguished variable: lowest pair index among negative basics.
    int dist_row = -1;
    for (int i = 0; i < n; ++i) {
      if (t.value(i) < -zero_band && (dist_row < 0 || t.pair(t.basic(i)) < t.pair(t.basic(dist_row)))) {
        dist_row = i;
      }
    }
    if (dist_row < 0) break;
    const int distinguished = t.basic(dist_row);
    int driving = t.complement(distinguished);

    for (;;) {
      const Eigen::VectorXd rate = t.direction(driving);
      int block_row = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < n; ++i) {
        double theta;
        if (i == dist_row) {
          if (rate[i] <= rate_eps) continue;
          theta = -t.value(i) / rate[i];
        } else {
          // Only variables that are currently nonnegative are protected.
          if (t.value(i) < -zero_band || rate[i] >= -rate_eps) continue;
          theta = std::max(t.value(i), 0.0) / -rate[i];
        }
        bool take = false;
        if (block_row < 0 || theta < best) {
          take = true;
        } else if (theta == best && block_row != dist_row) {
          take = (i == dist_row) || t.pair(t.basic(i)) < t.pair(t.basic(block_row));
        }
        if (take) {
          best = theta;
          block_row = i;
        }
      }
      if (block_row < 0) {
        throw LcpInfeasible("LCP ray termination: driving variable " + std::to_string(driving) +
                            " is unblocked");
      }
      const double element = t.element(block_row, driving);
      if (std::abs(element) < options.pivot_floor) {
        throw LcpDegeneratePivot("pivot element " + std::to_string(element) +
                                 " below floor");
      }
      if (pivots == max_pivots) {
        throw LcpNonConvergence("LCP pivot limit " + std::to_string(max_pivots) + " reached",
                                t.z().cwiseMax(0.0), pivots);
      }
      const int leaving = t.basic(block_row);
      t.pivot(block_row, driving);
      ++pivots;
      if (leaving == distinguished) break;
      driving = t.complement(leaving);
    }
  }

  LcpSolution sol;
  sol.pivots = pivots;
  sol.z = refine(problem, t.basic_z_pairs());
  sol.w = problem.M * sol.z + problem.q;
  const LcpCertificate cert = certify(problem, sol.z, sol.w);
  if (!cert.ok(options.tol)) {
    throw SolverError("LCP certificate failed: complementarity " +
                      std::to_string(cert.complementarity) + ", min value " +
                      std::to_string(cert.min_value) + ", residual " +
                      std::to_string(cert.equation_residual));
  }
  return sol;
}

}  // namespace myotrack
