#pragma once

#include <span>

#include <Eigen/Core>

#include "myotrack/chain_model.hpp"

namespace myotrack {

inline constexpr double kDefaultTimestep = 0.010;

struct Wrench {
  Eigen::Vector3d force = Eigen::Vector3d::Zero();
  Eigen::Vector3d torque = Eigen::Vector3d::Zero();
};

/// Spring wrenches referenced at a common world point (the spring frame
/// origin on body B), so that on_a == -on_b exactly.
struct SpringWrench {
  Wrench on_a;
  Wrench on_b;
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
};

/// 6-vector pose error of the spring frame on B relative to its rest offset
/// from the frame on A: translation residual in A's frame, then the rotation
/// vector of the residual rotation.
Vector6d spring_displacement(const FrameSpring& spring, const Pose& pose_a, const Pose& pose_b);

/// Restoring wrench: exact negative gradient of the quadratic spring energy
/// plus diagonal damping on the relative velocity. For the base, pass an
/// identity pose and zero twist for A.
SpringWrench spring_wrench(const FrameSpring& spring, const Pose& pose_a, const Pose& pose_b,
                           const Twist& twist_a, const Twist& twist_b);

/// 0.5 * dxi^T K dxi
double spring_energy(const FrameSpring& spring, const Pose& pose_a, const Pose& pose_b);

struct MuscleGeometry {
  double length = 0.0;
  double lengthening_velocity = 0.0;
  /// Unit vector from the origin attachment to the insertion attachment.
  Eigen::Vector3d direction = Eigen::Vector3d::UnitZ();
};

/// Throws InvalidArgument when the attachment points coincide.
MuscleGeometry muscle_geometry(const ChainModel& model, const ModelState& state, int muscle_index);

/// Muscle tension (N) in the given state.
double muscle_tension(const ChainModel& model, const ModelState& state, int muscle_index,
                      double excitation);

/// Advance by dt (split into model.substeps semi-implicit Euler sub-steps).
/// Excitations must lie in [0, 1]. Throws SimulationDiverged on non-finite
/// state.
ModelState step(const ChainModel& model, const ModelState& state,
                std::span<const double> excitations, double dt = kDefaultTimestep);

struct EnergyBreakdown {
  double kinetic = 0.0;
  /// Relative to the rest configuration; includes external loads.
  double gravitational = 0.0;
  double spring = 0.0;
  double muscle_passive = 0.0;
  double total() const { return kinetic + gravitational + spring + muscle_passive; }
};

EnergyBreakdown mechanical_energy(const ChainModel& model, const ModelState& state);

/// Stacked canonical orientation quaternions (w, x, y, z) per body, followed
/// by body positions when requested.
Eigen::VectorXd pose_features(const ModelState& state, bool include_positions = false);

struct Sensitivity {
  /// Column j: feature change after one step with muscle j fully excited.
  Eigen::MatrixXd lambda;
  /// Features after one step with zero excitation.
  Eigen::VectorXd u0;
};

/// Affine next-step model u(a) ~= u0 + lambda * a from num_muscles + 1 probe
/// steps out of the same state.
Sensitivity sensitivity(const ChainModel& model, const ModelState& state,
                        std::span<const double> excitations_prev, double dt = kDefaultTimestep,
                        bool include_positions = false);

}  // namespace myotrack
