#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "myotrack/quaternion.hpp"

namespace myotrack {

using Vector6d = Eigen::Matrix<double, 6, 1>;

/// Body index that denotes the fixed, non-dynamic base.
inline constexpr int kBase = -1;

struct Pose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Quat orientation = Quat::Identity();
};

/// World-frame linear velocity of the center of mass and angular velocity.
struct Twist {
  Eigen::Vector3d linear = Eigen::Vector3d::Zero();
  Eigen::Vector3d angular = Eigen::Vector3d::Zero();
};

struct RigidBody {
  double mass = 1.0;
  /// Body-frame inertia about the center of mass.
  Eigen::Matrix3d inertia = Eigen::Matrix3d::Identity();
  Pose rest_pose;
};

/// Mass-less six-dimensional spring between two bodies. The spring frame is
/// attached to each body at a local point with the body's orientation; at
/// rest the frame on B sits at `rest_offset` relative to the frame on A.
struct FrameSpring {
  int body_a = kBase;
  int body_b = 0;
  Eigen::Vector3d attach_a = Eigen::Vector3d::Zero();
  Eigen::Vector3d attach_b = Eigen::Vector3d::Zero();
  Pose rest_offset;
  /// Translational (N/m) then rotational (N*m/rad) diagonal stiffness.
  Vector6d stiffness = Vector6d::Zero();
  /// Translational (N*s/m) then rotational (N*m*s/rad) diagonal damping.
  Vector6d damping = Vector6d::Zero();
};

enum class MuscleMode { kLinear, kHill };

/// Straight-line pull-only actuator between two attachment points.
struct Muscle {
  int origin_body = kBase;
  int insertion_body = 0;
  Eigen::Vector3d origin_point = Eigen::Vector3d::Zero();
  Eigen::Vector3d insertion_point = Eigen::Vector3d::Zero();
  double max_iso_force = 100.0;
  double opt_fiber_length = 0.1;
  double tendon_ratio = 0.0;
  double pennation = 0.0;
  MuscleMode mode = MuscleMode::kHill;
};

/// Constant world-frame wrench applied at a body's center of mass.
struct ExternalLoad {
  int body = 0;
  Eigen::Vector3d force = Eigen::Vector3d::Zero();
  Eigen::Vector3d torque = Eigen::Vector3d::Zero();
};

struct ChainModel {
  std::vector<RigidBody> bodies;
  std::vector<FrameSpring> springs;
  std::vector<Muscle> muscles;
  Eigen::Vector3d gravity{0.0, 0.0, -9.81};
  std::vector<ExternalLoad> external_loads;
  /// Integrator sub-steps per call to step(); the spring chain is stiff.
  int substeps = 10;

  int num_bodies() const { return static_cast<int>(bodies.size()); }
  int num_muscles() const { return static_cast<int>(muscles.size()); }

  /// Throws InvalidArgument when an invariant is violated.
  void validate() const;
};

struct ModelState {
  std::vector<Pose> poses;
  std::vector<Twist> twists;
  double time = 0.0;
};

/// Bodies at their rest poses with zero twists.
ModelState rest_state(const ChainModel& model);

/// Parameters of the generated chain. Bodies are stacked along +z on a fixed
/// base; level i holds spring i (body i-1 or base to body i) and
/// `muscles_per_level` muscles arranged around the chain axis.
struct ChainConfig {
  int num_bodies = 5;
  int muscles_per_level = 8;

  double body_mass = 1.0;
  Eigen::Vector3d body_inertia{0.01, 0.01, 0.01};
  /// Optional per-body overrides; empty means use body_mass/body_inertia.
  std::vector<double> masses;
  std::vector<Eigen::Vector3d> inertias;

  double level_height = 0.04;

  Vector6d stiffness = (Vector6d() << 2.0e4, 2.0e4, 2.0e4, 10.0, 10.0, 10.0).finished();
  /// Optional per-level stiffness overrides.
  std::vector<Vector6d> level_stiffness;
  /// damping = damping_ratio * stiffness unless `level_damping` is given.
  double damping_ratio = 0.05;
  std::vector<Vector6d> level_damping;

  double muscle_radius = 0.03;
  /// Angular offset (rad) between origin and insertion of the twisted pairs.
  double muscle_twist = 0.5;
  double max_iso_force = 150.0;
  double tendon_ratio = 0.2;
  double pennation = 0.0;
  MuscleMode muscle_mode = MuscleMode::kHill;
  /// Explicit muscle table; when non-empty it replaces the generated layout.
  std::vector<Muscle> muscles;

  Eigen::Vector3d gravity{0.0, 0.0, -9.81};
  std::vector<ExternalLoad> external_loads;
  int substeps = 10;
};

ChainModel build_chain(const ChainConfig& config);

}  // namespace myotrack
