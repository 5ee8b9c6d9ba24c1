#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace myotrack {

using Quat = Eigen::Quaterniond;

/// Flip to the w >= 0 hemisphere. Both signs encode the same rotation.
Quat canonical(const Quat& q);

/// Normalize and canonicalize.
Quat renormalized(const Quat& q);

/// Rotation vector (axis * angle, angle in [0, pi]) of a unit quaternion.
Eigen::Vector3d log_map(const Quat& q);

/// Inverse of log_map.
Quat exp_map(const Eigen::Vector3d& rotation_vector);

/// Rotation by `fraction` of q's rotation, measured from identity.
Quat slerp_from_identity(const Quat& q, double fraction);

/// Geodesic angle (radians) between two orientations, in [0, pi].
double geodesic_angle(const Quat& a, const Quat& b);

/// (w, x, y, z) coefficients, in that order.
Eigen::Vector4d to_wxyz(const Quat& q);
Quat from_wxyz(const Eigen::Vector4d& v);

/// q flipped, if needed, into the hemisphere of `reference`.
Quat sign_aligned(const Quat& q, const Quat& reference);

/// Inverse transpose of the left Jacobian of SO(3) evaluated at a rotation
/// vector. Maps the gradient of a function of log(R) to a world-frame torque.
Eigen::Matrix3d so3_left_jacobian_inverse_transpose(const Eigen::Vector3d& phi);

Eigen::Matrix3d skew(const Eigen::Vector3d& v);

}  // namespace myotrack
