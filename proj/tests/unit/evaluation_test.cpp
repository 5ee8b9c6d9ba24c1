#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "myotrack/errors.hpp"
#include "myotrack/evaluation.hpp"
#include "myotrack/metrics.hpp"

namespace myotrack {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

ModelState single_body(const Quat& q) {
  ModelState s;
  s.poses.resize(1);
  s.poses[0].orientation = q;
  return s;
}

Quat random_quat(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  return Quat(g(rng), g(rng), g(rng), g(rng)).normalized();
}

// Angle of R_a^T R_b from the rotation-matrix trace.
double matrix_angle_deg(const Quat& a, const Quat& b) {
  const Eigen::Matrix3d r = a.toRotationMatrix().transpose() * b.toRotationMatrix();
  const double c = std::clamp((r.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c) / kDeg;
}

TEST(Correctness, PinnedAtTargetIsZero) {
  const TargetSpec t{{Quat(Eigen::AngleAxisd(0.3, Eigen::Vector3d::UnitY()))}};
  std::vector<ModelState> traj(10, single_body(t.orientations[0]));
  EXPECT_EQ(metric_correctness(traj, t), 0.0);
}

TEST(Correctness, ConstantOffset) {
  const TargetSpec t{{Quat::Identity()}};
  std::vector<ModelState> traj(
      7, single_body(Quat(Eigen::AngleAxisd(5.0 * kDeg, Eigen::Vector3d::UnitZ()))));
  EXPECT_NEAR(metric_correctness(traj, t), 5.0, 1e-12);
}

TEST(Correctness, MatchesRotationMatrixOracle) {
  std::mt19937_64 rng(3);
  TargetSpec t;
  for (int b = 0; b < 3; ++b) t.orientations.push_back(random_quat(rng));
  std::vector<ModelState> traj;
  double expect = 0.0;
  for (int k = 0; k < 50; ++k) {
    ModelState s;
    s.poses.resize(3);
    double sum = 0.0;
    for (int b = 0; b < 3; ++b) {
      // Stay well away from 180 degrees where acos loses precision.
      const Quat q = t.orientations[b] *
                     Quat(Eigen::AngleAxisd(std::uniform_real_distribution<double>(0.05, 2.5)(rng),
                                            random_quat(rng).vec().normalized()));
      s.poses[b].orientation = rng() % 2 ? q : Quat(-q.coeffs());
      sum += matrix_angle_deg(t.orientations[b], s.poses[b].orientation);
    }
    expect += sum / 50.0;
    traj.push_back(s);
    EXPECT_NEAR(pose_error_deg(s, t), sum, 1e-9);
  }
  EXPECT_NEAR(metric_correctness(traj, t), expect, 1e-9);
  EXPECT_THROW(metric_correctness({}, t), InvalidArgument);
}

TEST(Stability, Examples) {
  EXPECT_EQ(metric_stability(std::vector<double>(5, 2.5)), 0.0);
  EXPECT_DOUBLE_EQ(metric_stability(std::vector<double>{1, 3, 1, 3}), 1.0);
  EXPECT_THROW(metric_stability(std::vector<double>{1.0}), InvalidArgument);
}

TEST(Stability, MatchesTwoPass) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 30.0);
  std::vector<double> v(200);
  for (double& x : v) x = u(rng);
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= v.size();
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  EXPECT_NEAR(metric_stability(v), std::sqrt(ss / v.size()), 1e-12);
}

TEST(Temporal, ConstantIsZero) {
  const MeanStd m = metric_temporal(std::vector<Eigen::VectorXd>(9, Eigen::VectorXd::Constant(4, 0.3)));
  EXPECT_EQ(m.mean, 0.0);
  EXPECT_EQ(m.std, 0.0);
  EXPECT_THROW(metric_temporal({Eigen::VectorXd::Zero(2)}), InvalidArgument);
}

TEST(Temporal, MatchesBruteForce) {
  std::vector<Eigen::VectorXd> a;
  for (int t = 0; t < 40; ++t) a.push_back(Eigen::VectorXd::Random(6).cwiseAbs());
  std::vector<double> d;
  for (int t = 1; t < 40; ++t) {
    double s = 0.0;
    for (int i = 0; i < 6; ++i) s += (a[t](i) - a[t - 1](i)) * (a[t](i) - a[t - 1](i));
    d.push_back(std::sqrt(s));
  }
  double mean = 0.0, var = 0.0;
  for (double x : d) mean += x / d.size();
  for (double x : d) var += (x - mean) * (x - mean) / d.size();
  const MeanStd m = metric_temporal(a);
  EXPECT_NEAR(m.mean, mean, 1e-12);
  EXPECT_NEAR(m.std, std::sqrt(var), 1e-12);
}

TEST(Efficiency, Examples) {
  MeanStd m = metric_efficiency(std::vector<Eigen::VectorXd>(3, Eigen::VectorXd::Zero(5)));
  EXPECT_EQ(m.mean, 0.0);
  EXPECT_EQ(m.std, 0.0);
  m = metric_efficiency(std::vector<Eigen::VectorXd>(4, Eigen::VectorXd::Ones(9)));
  EXPECT_DOUBLE_EQ(m.mean, 3.0);
  EXPECT_EQ(m.std, 0.0);
  EXPECT_THROW(metric_efficiency({}), InvalidArgument);
}

TEST(Efficiency, MatchesBruteForce) {
  std::vector<Eigen::VectorXd> a;
  std::vector<double> n;
  for (int t = 0; t < 30; ++t) {
    a.push_back(Eigen::VectorXd::Random(5).cwiseAbs());
    n.push_back(std::sqrt(a.back().array().square().sum()));
  }
  double mean = 0.0, var = 0.0;
  for (double x : n) mean += x / n.size();
  for (double x : n) var += (x - mean) * (x - mean) / n.size();
  const MeanStd m = metric_efficiency(a);
  EXPECT_NEAR(m.mean, mean, 1e-12);
  EXPECT_NEAR(m.std, std::sqrt(var), 1e-12);
}

// ---------------------------------------------------------------------------

ChainModel desk_chain() {
  ChainConfig c;
  c.num_bodies = 2;
  c.muscles_per_level = 4;
  return build_chain(c);
}

CostWeights desk_weights() {
  CostWeights w;
  w.w_u = 1000.0;
  return w;
}

// Returns zero excitation regardless of state.
class IdleController final : public Controller {
 public:
  std::string name() const override { return "idle"; }
  void bind(const SpineEnv&) override {}
  Eigen::VectorXd act(const SpineEnv& env, const Eigen::VectorXd&) override {
    return Eigen::VectorXd::Zero(env.act_dim());
  }
};

TEST(RunEval, IdleAtIdentityTargetIsZero) {
  EnvConfig c;
  c.flexion_deg = c.lateral_deg = c.axial_deg = 0.0;
  IdleController idle;
  const MetricsReport r = run_eval(desk_chain(), c, idle, TrialConfig{1, 1, 0});
  ASSERT_EQ(r.trials.size(), 1u);
  EXPECT_LE(r.summary.error_c, 1e-6);
  EXPECT_EQ(r.summary.error_t.mean, 0.0);
  EXPECT_EQ(r.summary.error_e.mean, 0.0);
}

TEST(RunEval, FdatIsDeterministic) {
  FdatController f(desk_weights());
  const TrialConfig tc{3, 20, 9};
  const MetricsReport a = run_eval(desk_chain(), EnvConfig{}, f, tc);
  const MetricsReport b = run_eval(desk_chain(), EnvConfig{}, f, tc);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(a.trials[i].error_c, b.trials[i].error_c);
    EXPECT_EQ(a.trials[i].error_t.mean, b.trials[i].error_t.mean);
    EXPECT_EQ(a.trials[i].seed, b.trials[i].seed);
  }
  EXPECT_EQ(a.summary.error_c, b.summary.error_c);
}

TEST(RunEval, FdatBeatsIdle) {
  FdatController f(desk_weights());
  IdleController idle;
  const TrialConfig tc{4, 60, 2};
  const MetricsReport rf = run_eval(desk_chain(), EnvConfig{}, f, tc);
  const MetricsReport ri = run_eval(desk_chain(), EnvConfig{}, idle, tc);
  EXPECT_LT(rf.summary.error_c, 0.5 * ri.summary.error_c);
  EXPECT_GT(rf.summary.error_e.mean, 0.0);
}

TEST(RunEval, SameSeedSameTargets) {
  EXPECT_EQ(trial_seed(5, 3), trial_seed(5, 3));
  EXPECT_NE(trial_seed(5, 3), trial_seed(5, 4));
  EXPECT_NE(trial_seed(5, 3), trial_seed(6, 3));
}

TEST(RunEval, CheckpointMismatch) {
  Checkpoint c;
  c.policy = GaussianPolicy(10, 3, 1);
  c.normalizer = RunningNormalizer(10);
  PolicyController p(c);
  EXPECT_THROW(run_eval(desk_chain(), EnvConfig{}, p, TrialConfig{1, 2, 0}), InvalidArgument);
  EXPECT_THROW(run_eval(desk_chain(), EnvConfig{}, p, TrialConfig{0, 2, 0}), InvalidArgument);
}

TEST(RunEval, CsvHasTrialRowsAndSummary) {
  FdatController f(desk_weights());
  const MetricsReport r = run_eval(desk_chain(), EnvConfig{}, f, TrialConfig{3, 5, 1});
  const auto path = std::filesystem::temp_directory_path() / "myotrack_eval_test" / "r.csv";
  write_report_csv(r, path.string());
  std::ifstream in(path);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 5u);
  EXPECT_EQ(lines[0].rfind("controller,trial,seed,error_c,", 0), 0u);
  EXPECT_EQ(lines[4].rfind("fdat,summary,", 0), 0u);
  std::filesystem::remove_all(path.parent_path());
}

TEST(Timing, RejectsZeroSteps) {
  FdatController f(desk_weights());
  IdleController idle;
  EXPECT_THROW(timing_benchmark(desk_chain(), EnvConfig{}, f, idle, 0, 1), InvalidArgument);
  const TimingResult t = timing_benchmark(desk_chain(), EnvConfig{}, f, idle, 5, 1);
  EXPECT_EQ(t.steps, 5);
  EXPECT_GT(t.fdat_step_time, 0.0);
}

}  // namespace
}  // namespace myotrack
