#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "myotrack/chain_model.hpp"
#include "myotrack/dynamics.hpp"
#include "myotrack/errors.hpp"
#include "myotrack/muscle.hpp"

namespace myotrack {
namespace {

Eigen::Vector3d random_vec(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng)};
}

Quat random_rotation(std::mt19937_64& rng, double max_angle) {
  return exp_map(random_vec(rng, max_angle / std::sqrt(3.0)));
}

// ---------------------------------------------------------------------------
// build_chain

TEST(BuildChain, DefaultCounts) {
  const ChainModel m = build_chain(ChainConfig{});
  EXPECT_EQ(m.num_bodies(), 5);
  EXPECT_EQ(m.springs.size(), 5u);
  EXPECT_EQ(m.num_muscles(), 40);
}

TEST(BuildChain, SingleBodyFourMuscles) {
  ChainConfig c;
  c.num_bodies = 1;
  c.muscles_per_level = 4;
  const ChainModel m = build_chain(c);
  EXPECT_EQ(m.num_bodies(), 1);
  EXPECT_EQ(m.num_muscles(), 4);
  EXPECT_EQ(m.springs[0].body_a, kBase);
  for (const auto& mu : m.muscles) EXPECT_EQ(mu.origin_body, kBase);
}

TEST(BuildChain, RejectsInvalidConfig) {
  ChainConfig c;
  c.body_mass = 0.0;
  EXPECT_THROW(build_chain(c), InvalidArgument);
  c = ChainConfig{};
  c.num_bodies = 0;
  EXPECT_THROW(build_chain(c), InvalidArgument);
  c = ChainConfig{};
  c.stiffness[3] = 0.0;
  EXPECT_THROW(build_chain(c), InvalidArgument);
  c = ChainConfig{};
  c.muscles_per_level = 0;
  EXPECT_THROW(build_chain(c), InvalidArgument);
}

TEST(BuildChain, RestIsSlack) {
  const ChainModel m = build_chain(ChainConfig{});
  const ModelState s = rest_state(m);
  for (int k = 0; k < m.num_muscles(); ++k) {
    const double len = muscle_geometry(m, s, k).length;
    EXPECT_LE(normalized_fiber_length(m.muscles[k], len), 1.0);
    EXPECT_NEAR(normalized_fiber_length(m.muscles[k], len), 1.0, 1e-12);
  }
}

// ---------------------------------------------------------------------------
// spring_wrench

FrameSpring unit_spring() {
  FrameSpring s;
  s.body_a = kBase;
  s.body_b = 0;
  s.attach_b = Eigen::Vector3d(0, 0, -0.02);
  s.rest_offset.position = Eigen::Vector3d(0, 0, 0);
  s.stiffness << 1000, 2000, 3000, 10, 20, 30;
  s.damping << 5, 6, 7, 0.1, 0.2, 0.3;
  return s;
}

TEST(SpringWrench, ZeroAtRest) {
  const FrameSpring s = unit_spring();
  Pose pb;
  pb.position = Eigen::Vector3d(0, 0, 0.02);
  const SpringWrench w = spring_wrench(s, Pose{}, pb, Twist{}, Twist{});
  EXPECT_EQ(w.on_b.force.norm(), 0.0);
  EXPECT_EQ(w.on_b.torque.norm(), 0.0);
}

TEST(SpringWrench, LinearRotationalLaw) {
  for (int axis = 0; axis < 3; ++axis) {
    FrameSpring s;
    s.stiffness << 0, 0, 0, 10, 10, 10;
    Pose pb;
    pb.orientation = exp_map(0.1 * Eigen::Vector3d::Unit(axis));
    const SpringWrench w = spring_wrench(s, Pose{}, pb, Twist{}, Twist{});
    EXPECT_NEAR(w.on_b.torque.norm(), 1.0, 1e-12);
    EXPECT_NEAR(w.on_b.torque[axis], -1.0, 1e-12);
  }
}

TEST(SpringWrench, PairSumsToZero) {
  std::mt19937_64 rng(3);
  const FrameSpring s = unit_spring();
  for (int trial = 0; trial < 50; ++trial) {
    Pose pa{random_vec(rng, 0.01), random_rotation(rng, 0.3)};
    Pose pb{random_vec(rng, 0.05), random_rotation(rng, 0.3)};
    Twist ta{random_vec(rng, 1.0), random_vec(rng, 1.0)};
    Twist tb{random_vec(rng, 1.0), random_vec(rng, 1.0)};
    const SpringWrench w = spring_wrench(s, pa, pb, ta, tb);
    EXPECT_EQ((w.on_a.force + w.on_b.force).norm(), 0.0);
    EXPECT_EQ((w.on_a.torque + w.on_b.torque).norm(), 0.0);
  }
}

// Independent energy: rotation residual from a rotation matrix through
// Eigen's angle-axis conversion, translation from explicit frame algebra.
double oracle_spring_energy(const FrameSpring& s, const Pose& pa, const Pose& pb) {
  const Eigen::Matrix3d ra = pa.orientation.toRotationMatrix();
  const Eigen::Matrix3d rb = pb.orientation.toRotationMatrix();
  const Eigen::Matrix3d r0 = s.rest_offset.orientation.toRotationMatrix();
  const Eigen::Vector3d xa = pa.position + ra * s.attach_a;
  const Eigen::Vector3d xb = pb.position + rb * s.attach_b;
  const Eigen::Vector3d et = ra.transpose() * (xb - xa) - s.rest_offset.position;
  const Eigen::AngleAxisd aa(Eigen::Matrix3d(r0.transpose() * ra.transpose() * rb));
  const Eigen::Vector3d er = aa.axis() * aa.angle();
  double e = 0.0;
  for (int i = 0; i < 3; ++i) {
    e += 0.5 * s.stiffness[i] * et[i] * et[i] + 0.5 * s.stiffness[3 + i] * er[i] * er[i];
  }
  return e;
}

// Rigid perturbation of a pose about a world point: translate by dx, rotate
// by dtheta (world frame).
Pose perturbed(const Pose& p, const Eigen::Vector3d& about, const Eigen::Vector3d& dx,
               const Eigen::Vector3d& dtheta) {
  const Quat r = exp_map(dtheta);
  Pose out;
  out.position = about + r * (p.position - about) + dx;
  out.orientation = r * p.orientation;
  return out;
}

TEST(SpringWrench, MatchesEnergyGradient) {
  std::mt19937_64 rng(11);
  FrameSpring s = unit_spring();
  s.body_a = 0;
  s.body_b = 1;
  s.attach_a = Eigen::Vector3d(0.001, 0.002, 0.02);
  s.rest_offset.position = Eigen::Vector3d(0.001, -0.002, 0.003);
  s.rest_offset.orientation = exp_map(Eigen::Vector3d(0.05, -0.02, 0.1));
  s.damping.setZero();
  const double h = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    const Pose pa{random_vec(rng, 0.02), random_rotation(rng, 0.6)};
    const Pose pb{random_vec(rng, 0.05), random_rotation(rng, 0.9)};
    const SpringWrench w = spring_wrench(s, pa, pb, Twist{}, Twist{});
    Eigen::Matrix<double, 6, 1> analytic_b, analytic_a, fd_b, fd_a;
    analytic_b << w.on_b.force, w.on_b.torque;
    analytic_a << w.on_a.force, w.on_a.torque;
    for (int k = 0; k < 6; ++k) {
      Eigen::Vector3d dx = Eigen::Vector3d::Zero(), dt = Eigen::Vector3d::Zero();
      (k < 3 ? dx : dt)[k % 3] = h;
      fd_b[k] = -(oracle_spring_energy(s, pa, perturbed(pb, w.point, dx, dt)) -
                  oracle_spring_energy(s, pa, perturbed(pb, w.point, -dx, -dt))) /
                (2 * h);
      fd_a[k] = -(oracle_spring_energy(s, perturbed(pa, w.point, dx, dt), pb) -
                  oracle_spring_energy(s, perturbed(pa, w.point, -dx, -dt), pb)) /
                (2 * h);
    }
    EXPECT_LE((analytic_b - fd_b).norm(), 1e-6 * fd_b.norm()) << "trial " << trial;
    EXPECT_LE((analytic_a - fd_a).norm(), 1e-6 * fd_a.norm()) << "trial " << trial;
  }
}

TEST(SpringWrench, DampingOpposesRelativeMotion) {
  FrameSpring s;
  s.damping << 3, 3, 3, 2, 2, 2;
  Twist tb;
  tb.angular = Eigen::Vector3d(0.0, 0.0, 1.5);
  const SpringWrench w = spring_wrench(s, Pose{}, Pose{}, Twist{}, tb);
  EXPECT_NEAR(w.on_b.torque.z(), -3.0, 1e-12);
  EXPECT_NEAR(w.on_b.force.norm(), 0.0, 1e-12);
}

// ---------------------------------------------------------------------------
// muscle_geometry

ChainModel two_point_model() {
  ChainConfig c;
  c.num_bodies = 1;
  Muscle mu;
  mu.origin_body = kBase;
  mu.insertion_body = 0;
  mu.origin_point = Eigen::Vector3d(0, 0, 0.0);
  mu.insertion_point = Eigen::Vector3d(0, 0, 0.08);  // world z = 0.02 + 0.08
  mu.opt_fiber_length = 0.1;
  c.muscles = {mu};
  return build_chain(c);
}

TEST(MuscleGeometry, StaticLength) {
  const ChainModel m = two_point_model();
  const ModelState s = rest_state(m);
  const MuscleGeometry g = muscle_geometry(m, s, 0);
  EXPECT_NEAR(g.length, 0.1, 1e-15);
  EXPECT_EQ(g.lengthening_velocity, 0.0);
  EXPECT_NEAR(g.direction.z(), 1.0, 1e-15);
}

TEST(MuscleGeometry, TranslatingInsertion) {
  const ChainModel m = two_point_model();
  ModelState s = rest_state(m);
  s.twists[0].linear = Eigen::Vector3d(0, 0, 0.2);
  EXPECT_NEAR(muscle_geometry(m, s, 0).lengthening_velocity, 0.2, 1e-15);
}

TEST(MuscleGeometry, CoincidentPointsRejected) {
  ChainModel m = two_point_model();
  m.muscles[0].insertion_point = Eigen::Vector3d(0, 0, -0.02);
  EXPECT_THROW(muscle_geometry(m, rest_state(m), 0), InvalidArgument);
}

TEST(MuscleGeometry, VelocityMatchesCentralDifference) {
  std::mt19937_64 rng(5);
  const ChainModel m = build_chain(ChainConfig{});
  const double h = 1e-6;
  for (int trial = 0; trial < 10; ++trial) {
    ModelState s = rest_state(m);
    for (int i = 0; i < m.num_bodies(); ++i) {
      s.poses[i].position += random_vec(rng, 0.003);
      s.poses[i].orientation = random_rotation(rng, 0.2) * s.poses[i].orientation;
      s.twists[i] = Twist{random_vec(rng, 0.3), random_vec(rng, 2.0)};
    }
    auto advanced = [&](double dt) {
      ModelState out = s;
      for (int i = 0; i < m.num_bodies(); ++i) {
        out.poses[i].position += dt * s.twists[i].linear;
        out.poses[i].orientation = exp_map(dt * s.twists[i].angular) * s.poses[i].orientation;
      }
      return out;
    };
    const ModelState plus = advanced(h), minus = advanced(-h);
    for (int k = 0; k < m.num_muscles(); ++k) {
      const double fd =
          (muscle_geometry(m, plus, k).length - muscle_geometry(m, minus, k).length) / (2 * h);
      EXPECT_NEAR(muscle_geometry(m, s, k).lengthening_velocity, fd, 1e-5);
    }
  }
}

// ---------------------------------------------------------------------------
// muscle_force

TEST(MuscleForce, SlackAndUnexcitedIsZero) {
  Muscle mu;
  for (double l : {0.5, 0.8, 1.0}) {
    EXPECT_EQ(muscle_force(mu, 0.0, l, 0.0), 0.0);
    mu.mode = MuscleMode::kLinear;
    EXPECT_EQ(muscle_force(mu, 0.0, l, 0.0), 0.0);
    mu.mode = MuscleMode::kHill;
  }
}

TEST(MuscleForce, PeakIsMaxIsometric) {
  Muscle mu;
  mu.max_iso_force = 321.0;
  EXPECT_DOUBLE_EQ(muscle_force(mu, 1.0, 1.0, 0.0), 321.0);
}

TEST(MuscleForce, HalfExcitationStretched) {
  Muscle mu;
  mu.max_iso_force = 200.0;
  // Closed forms: fL = exp(-(0.2/0.45)^2), fV(0) = 1, fPE = (2 * 0.2)^2.
  const double expected = 200.0 * (0.5 * std::exp(-std::pow(0.2 / 0.45, 2)) + 0.16);
  EXPECT_NEAR(muscle_force(mu, 0.5, 1.2, 0.0), expected, 1e-12);
  EXPECT_NEAR(expected, 114.0755, 1e-4);
  mu.pennation = 0.3;
  EXPECT_NEAR(muscle_force(mu, 0.5, 1.2, 0.0), expected * std::cos(0.3), 1e-12);
  mu.mode = MuscleMode::kLinear;
  EXPECT_NEAR(muscle_force(mu, 0.5, 1.2, 0.0), 200.0 * (0.5 + 0.16), 1e-12);
}

TEST(MuscleForce, ForceVelocityShape) {
  EXPECT_DOUBLE_EQ(force_velocity(0.0), 1.0);
  EXPECT_DOUBLE_EQ(force_velocity(-1.0), 0.0);
  EXPECT_DOUBLE_EQ(force_velocity(-3.0), 0.0);
  EXPECT_LT(force_velocity(1e6), kEccentricMax);
  EXPECT_GT(force_velocity(1e6), 1.39);
  const double h = 1e-7;
  const double left = (force_velocity(0.0) - force_velocity(-h)) / h;
  const double right = (force_velocity(h) - force_velocity(0.0)) / h;
  EXPECT_NEAR(left, right, 1e-5);
  EXPECT_DOUBLE_EQ(passive_force_length(1.5), 1.0);
}

TEST(MuscleForce, RejectsBadExcitation) {
  Muscle mu;
  EXPECT_THROW(muscle_force(mu, -0.01, 1.0, 0.0), InvalidArgument);
  EXPECT_THROW(muscle_force(mu, 1.01, 1.0, 0.0), InvalidArgument);
  EXPECT_THROW(muscle_force(mu, std::nan(""), 1.0, 0.0), InvalidArgument);
}

TEST(MuscleForce, NeverPushes) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> a(0.0, 1.0), l(0.0, 3.0), v(-5.0, 5.0);
  Muscle hill, lin;
  lin.mode = MuscleMode::kLinear;
  for (int i = 0; i < 10000; ++i) {
    EXPECT_GE(muscle_force(hill, a(rng), l(rng), v(rng)), 0.0);
    EXPECT_GE(muscle_force(lin, a(rng), l(rng), v(rng)), 0.0);
  }
}

// ---------------------------------------------------------------------------
// step

TEST(Step, RestIsExactEquilibriumWithoutGravity) {
  ChainConfig c;
  c.gravity.setZero();
  const ChainModel m = build_chain(c);
  const ModelState s0 = rest_state(m);
  const std::vector<double> zero(m.num_muscles(), 0.0);
  ModelState s = s0;
  for (int i = 0; i < 50; ++i) s = step(m, s, zero);
  for (int i = 0; i < m.num_bodies(); ++i) {
    EXPECT_EQ(s.poses[i].position, s0.poses[i].position);
    EXPECT_EQ(s.poses[i].orientation.coeffs(), s0.poses[i].orientation.coeffs());
    EXPECT_EQ(s.twists[i].linear.norm(), 0.0);
    EXPECT_EQ(s.twists[i].angular.norm(), 0.0);
  }
}

TEST(Step, Deterministic) {
  const ChainModel m = build_chain(ChainConfig{});
  std::vector<double> a(m.num_muscles());
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& x : a) x = u(rng);
  const ModelState s1 = step(m, rest_state(m), a);
  const ModelState s2 = step(m, rest_state(m), a);
  for (int i = 0; i < m.num_bodies(); ++i) {
    EXPECT_EQ(s1.poses[i].position, s2.poses[i].position);
    EXPECT_EQ(s1.poses[i].orientation.coeffs(), s2.poses[i].orientation.coeffs());
    EXPECT_EQ(s1.twists[i].angular, s2.twists[i].angular);
  }
}

TEST(Step, QuaternionsStayUnit) {
  const ChainModel m = build_chain(ChainConfig{});
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ModelState s = rest_state(m);
  std::vector<double> a(m.num_muscles());
  for (int t = 0; t < 200; ++t) {
    for (auto& x : a) x = u(rng);
    s = step(m, s, a);
    for (const auto& p : s.poses) {
      EXPECT_NEAR(p.orientation.norm(), 1.0, 1e-9);
      EXPECT_GE(p.orientation.w(), 0.0);
    }
  }
}

TEST(Step, RejectsBadInput) {
  const ChainModel m = build_chain(ChainConfig{});
  std::vector<double> a(m.num_muscles(), 0.0);
  EXPECT_THROW(step(m, rest_state(m), a, 0.0), InvalidArgument);
  a[3] = 1.5;
  EXPECT_THROW(step(m, rest_state(m), a), InvalidArgument);
  a.pop_back();
  EXPECT_THROW(step(m, rest_state(m), a), InvalidArgument);
}

TEST(Step, NonFiniteStateDiverges) {
  const ChainModel m = build_chain(ChainConfig{});
  ModelState s = rest_state(m);
  s.twists[2].angular.x() = std::numeric_limits<double>::infinity();
  const std::vector<double> a(m.num_muscles(), 0.0);
  EXPECT_THROW(step(m, s, a), SimulationDiverged);
}

ModelState displaced_state(const ChainModel& m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ModelState s = rest_state(m);
  for (int i = 0; i < m.num_bodies(); ++i) {
    s.poses[i].orientation = random_rotation(rng, 0.1) * s.poses[i].orientation;
    s.poses[i].position += random_vec(rng, 1e-4);
    s.twists[i].angular = random_vec(rng, 0.5);
    s.twists[i].linear = random_vec(rng, 0.01);
  }
  return s;
}

TEST(Step, UndampedEnergyConserved) {
  ChainConfig c;
  c.damping_ratio = 0.0;
  c.substeps = 1;
  const ChainModel m = build_chain(c);
  ModelState s = displaced_state(m, 21);
  const std::vector<double> zero(m.num_muscles(), 0.0);
  const double e0 = mechanical_energy(m, s).total();
  ASSERT_GT(e0, 0.0);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    s = step(m, s, zero, 1e-4);
    worst = std::max(worst, std::abs(mechanical_energy(m, s).total() - e0));
  }
  EXPECT_LE(worst, 0.01 * e0);
}

TEST(Step, DampedEnergyNonIncreasing) {
  ChainConfig c;
  c.gravity.setZero();
  const ChainModel m = build_chain(c);
  ModelState s = displaced_state(m, 22);
  const std::vector<double> zero(m.num_muscles(), 0.0);
  double prev = mechanical_energy(m, s).total();
  for (int t = 0; t < 1000; ++t) {
    s = step(m, s, zero);
    const double e = mechanical_energy(m, s).total();
    EXPECT_LE(e, prev) << "step " << t;
    prev = e;
  }
  EXPECT_LT(prev, 1e-8);
}

// ---------------------------------------------------------------------------
// sensitivity

TEST(Sensitivity, BaseOnlyMuscleHasZeroColumn) {
  ChainConfig c;
  c.num_bodies = 2;
  c.muscles_per_level = 4;
  ChainModel m = build_chain(c);
  Muscle dead = m.muscles[0];
  dead.origin_body = kBase;
  dead.insertion_body = kBase;
  dead.origin_point = Eigen::Vector3d(0.03, 0, -0.02);
  dead.insertion_point = Eigen::Vector3d(0.03, 0, -0.07);
  m.muscles.push_back(dead);
  const std::vector<double> prev(m.num_muscles(), 0.0);
  const Sensitivity sens = sensitivity(m, rest_state(m), prev);
  EXPECT_EQ(sens.lambda.col(m.num_muscles() - 1).norm(), 0.0);
  EXPECT_GT(sens.lambda.col(0).norm(), 0.0);
}

TEST(Sensitivity, AffineModelAtZeroIsU0) {
  const ChainModel m = build_chain(ChainConfig{});
  const std::vector<double> zero(m.num_muscles(), 0.0);
  const ModelState s = displaced_state(m, 4);
  const Sensitivity sens = sensitivity(m, s, zero);
  EXPECT_EQ(sens.u0, pose_features(step(m, s, zero)));
}

TEST(Sensitivity, PredictsSmallExcitations) {
  const ChainModel m = build_chain(ChainConfig{});
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 0.05);
  const std::vector<double> zero(m.num_muscles(), 0.0);
  for (int trial = 0; trial < 10; ++trial) {
    const ModelState s = displaced_state(m, 100 + trial);
    const Sensitivity sens = sensitivity(m, s, zero);
    Eigen::VectorXd a(m.num_muscles());
    for (auto& x : a) x = u(rng);
    std::vector<double> av(a.data(), a.data() + a.size());
    const Eigen::VectorXd simulated = pose_features(step(m, s, av));
    EXPECT_LE((simulated - (sens.u0 + sens.lambda * a)).norm(), 1e-3);
  }
}

}  // namespace
}  // namespace myotrack
