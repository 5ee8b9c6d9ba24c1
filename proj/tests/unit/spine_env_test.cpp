#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "myotrack/errors.hpp"
#include "myotrack/spine_env.hpp"

namespace myotrack {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

ChainModel small_chain(int bodies = 2, int muscles = 4) {
  ChainConfig c;
  c.num_bodies = bodies;
  c.muscles_per_level = muscles;
  return build_chain(c);
}

Quat about_x(double degrees) {
  return Quat(Eigen::AngleAxisd(degrees * kDeg, Eigen::Vector3d::UnitX()));
}

TEST(Target, IdentityTopGivesIdentityEverywhere) {
  const TargetSpec t = target_from_top(Quat::Identity(), 5);
  ASSERT_EQ(t.orientations.size(), 5u);
  for (const Quat& q : t.orientations) EXPECT_LE(geodesic_angle(q, Quat::Identity()), 1e-15);
}

TEST(Target, FractionsFollowHeight) {
  const TargetSpec t = target_from_top(about_x(25.0), 5);
  EXPECT_NEAR(geodesic_angle(t.orientations[3], Quat::Identity()) / kDeg, 20.0, 1e-12);
  EXPECT_NEAR(geodesic_angle(t.orientations[3], about_x(20.0)), 0.0, 1e-12);
  EXPECT_NEAR(geodesic_angle(t.orientations[0], about_x(5.0)), 0.0, 1e-12);
  EXPECT_NEAR(geodesic_angle(t.orientations[4], about_x(25.0)), 0.0, 1e-12);
}

TEST(Target, SamplesStayInDomain) {
  EnvConfig c;
  std::mt19937_64 rng(11);
  double max_x = 0.0, max_y = 0.0, max_z = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const TargetSpec t = sample_target(rng, c, 5);
    // Recover the factors of Rz Ry Rx from the top body.
    const Eigen::Matrix3d r = t.orientations.back().toRotationMatrix();
    const double ly = -std::asin(r(2, 0));
    const double fx = std::atan2(r(2, 1), r(2, 2));
    const double az = std::atan2(r(1, 0), r(0, 0));
    EXPECT_LE(std::abs(fx), c.flexion_deg * kDeg + 1e-12);
    EXPECT_LE(std::abs(ly), c.lateral_deg * kDeg + 1e-12);
    EXPECT_LE(std::abs(az), c.axial_deg * kDeg + 1e-12);
    max_x = std::max(max_x, std::abs(fx));
    max_y = std::max(max_y, std::abs(ly));
    max_z = std::max(max_z, std::abs(az));
    EXPECT_GE(t.orientations.back().w(), 0.0);
  }
  // The audit should also see most of each range.
  EXPECT_GE(max_x, 0.95 * c.flexion_deg * kDeg);
  EXPECT_GE(max_y, 0.95 * c.lateral_deg * kDeg);
  EXPECT_GE(max_z, 0.95 * c.axial_deg * kDeg);
}

TEST(Distance, SignInvariant) {
  ModelState s;
  s.poses.resize(1);
  s.poses[0].orientation = about_x(10.0);
  TargetSpec t{{about_x(12.0)}};
  const double d = distance_sq(s, t);
  s.poses[0].orientation.coeffs() *= -1.0;
  EXPECT_DOUBLE_EQ(distance_sq(s, t), d);
  // |q - t|^2 = 2 - 2 cos(theta / 2) for aligned unit quaternions.
  EXPECT_NEAR(d, 2.0 - 2.0 * std::cos(1.0 * kDeg), 1e-15);
}

TEST(Reward, BonusAtTarget) {
  const ChainModel m = small_chain();
  const ModelState s = rest_state(m);
  const TargetSpec t = target_from_top(Quat::Identity(), 2);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(8);
  EXPECT_EQ(reward(s, t, zero, zero, EnvConfig{}), 5.0);
}

TEST(Reward, TermByTerm) {
  const ChainModel m = small_chain();
  const ModelState s = rest_state(m);
  const TargetSpec t = target_from_top(about_x(30.0), 2);
  EnvConfig c;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(8);
  const double d2 = distance_sq(s, t);
  ASSERT_GT(d2, c.reach_threshold);
  EXPECT_DOUBLE_EQ(reward(s, t, zero, zero, c), -d2 / (2.0 * 0.1));

  Eigen::VectorXd a = Eigen::VectorXd::LinSpaced(8, 0.0, 0.7), ap = Eigen::VectorXd::Constant(8, 0.2);
  const double expect = -d2 / 0.2 - 0.001 * 0.5 * (a - ap).squaredNorm() - 0.01 * 0.5 * a.squaredNorm();
  EXPECT_NEAR(reward(s, t, a, ap, c), expect, 1e-14);
}

TEST(SpineEnv, ObservationLayout) {
  SpineEnv env(small_chain(), EnvConfig{});
  EXPECT_EQ(env.obs_dim(), 16);
  const Eigen::VectorXd obs = env.reset_to(target_from_top(about_x(20.0), 2));
  ASSERT_EQ(obs.size(), 16);
  EXPECT_EQ(obs.head(4), Eigen::Vector4d(1, 0, 0, 0));
  EXPECT_EQ(obs.segment<4>(12), to_wxyz(about_x(20.0)));

  EnvConfig hidden;
  hidden.include_target = false;
  SpineEnv blind(small_chain(), hidden);
  EXPECT_EQ(blind.obs_dim(), 8);
  EXPECT_EQ(blind.reset(3).size(), 8);
}

TEST(SpineEnv, ZeroActionAtTargetTerminates) {
  SpineEnv env(small_chain(), EnvConfig{});
  env.reset_to(target_from_top(Quat::Identity(), 2));
  const StepResult r = env.step(Eigen::VectorXd::Zero(8));
  EXPECT_TRUE(r.terminal);
  EXPECT_EQ(r.info.reason, "reached");
  EXPECT_NEAR(r.reward, 5.0, 1e-6);
  EXPECT_THROW(env.step(Eigen::VectorXd::Zero(8)), Error);
}

TEST(SpineEnv, StepLimit) {
  EnvConfig c;
  c.max_steps = 7;
  SpineEnv env(small_chain(), c);
  env.reset_to(target_from_top(about_x(30.0), 2));
  for (int k = 1; k <= 7; ++k) {
    const StepResult r = env.step(Eigen::VectorXd::Zero(8));
    EXPECT_EQ(r.terminal, k == 7);
    EXPECT_TRUE(std::isfinite(r.reward));
    if (k == 7) EXPECT_EQ(r.info.reason, "step_limit");
  }
  EXPECT_TRUE(env.awaiting_reset());
}

TEST(SpineEnv, ActionsAreClipped) {
  SpineEnv a(small_chain(), EnvConfig{}), b(small_chain(), EnvConfig{});
  a.reset(5);
  b.reset(5);
  Eigen::VectorXd wild(8), tame(8);
  wild << -3, 0.5, 2, 0.1, 7, -0.1, 1, 0.9;
  tame << 0, 0.5, 1, 0.1, 1, 0, 1, 0.9;
  const StepResult ra = a.step(wild), rb = b.step(tame);
  EXPECT_EQ(ra.reward, rb.reward);
  EXPECT_EQ(ra.observation, rb.observation);
  EXPECT_EQ(a.last_action(), tame);
  EXPECT_DOUBLE_EQ(ra.info.activation_norm, tame.norm());
}

TEST(SpineEnv, ResetIsDeterministicAndRestoresRest) {
  SpineEnv env(small_chain(), EnvConfig{});
  const Eigen::VectorXd first = env.reset(42);
  env.step(Eigen::VectorXd::Constant(8, 0.3));
  EXPECT_EQ(env.step_count(), 1);
  const Eigen::VectorXd again = env.reset(42);
  EXPECT_EQ(first, again);
  EXPECT_EQ(env.step_count(), 0);
  EXPECT_EQ(env.last_action(), Eigen::VectorXd::Zero(8));
  EXPECT_GT(distance_sq(env.state(), env.target()), 0.0);
  EXPECT_NE(env.reset(43), first);
}

TEST(SpineEnv, RejectsBadActions) {
  SpineEnv env(small_chain(), EnvConfig{});
  env.reset(1);
  EXPECT_THROW(env.step(Eigen::VectorXd::Zero(7)), InvalidArgument);
  Eigen::VectorXd nan = Eigen::VectorXd::Zero(8);
  nan(2) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(env.step(nan), InvalidArgument);
  EXPECT_THROW(env.reset_to(target_from_top(Quat::Identity(), 3)), InvalidArgument);
}

TEST(SpineEnv, StepBeforeResetFails) {
  SpineEnv env(small_chain(), EnvConfig{});
  EXPECT_THROW(env.step(Eigen::VectorXd::Zero(8)), Error);
}

TEST(EnvConfig, Validation) {
  EnvConfig c;
  c.reach_threshold = 0.0;
  EXPECT_THROW(SpineEnv(small_chain(), c), InvalidArgument);
  c = EnvConfig{};
  c.max_steps = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
}

}  // namespace
}  // namespace myotrack
