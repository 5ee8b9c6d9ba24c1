#include "myotrack/quaternion.hpp"

#include <algorithm>
#include <cmath>

namespace myotrack {

Quat canonical(const Quat& q) {
  if (q.w() < 0.0) return Quat(-q.w(), -q.x(), -q.y(), -q.z());
  return q;
}

Quat renormalized(const Quat& q) { return canonical(q.normalized()); }

Eigen::Vector3d log_map(const Quat& q_in) {
  const Quat q = canonical(q_in);
  const Eigen::Vector3d v = q.vec();
  const double s = v.norm();
  if (s < 1e-12) {
    // angle ~ 2s, axis*angle ~ 2v / w
    return 2.0 * v / q.w();
  }
  const double angle = 2.0 * std::atan2(s, q.w());
  return v * (angle / s);
}

Quat exp_map(const Eigen::Vector3d& phi) {
  const double angle = phi.norm();
  if (angle < 1e-12) {
    Quat q(1.0, 0.5 * phi.x(), 0.5 * phi.y(), 0.5 * phi.z());
    return q.normalized();
  }
  const double half = 0.5 * angle;
  const Eigen::Vector3d v = phi * (std::sin(half) / angle);
  return Quat(std::cos(half), v.x(), v.y(), v.z());
}

Quat slerp_from_identity(const Quat& q, double fraction) {
  return canonical(exp_map(fraction * log_map(q)));
}

double geodesic_angle(const Quat& a, const Quat& b) {
  const Quat rel = a.conjugate() * b;
  return 2.0 * std::atan2(rel.vec().norm(), std::abs(rel.w()));
}

Eigen::Vector4d to_wxyz(const Quat& q) { return {q.w(), q.x(), q.y(), q.z()}; }

Quat from_wxyz(const Eigen::Vector4d& v) { return Quat(v[0], v[1], v[2], v[3]); }

Quat sign_aligned(const Quat& q, const Quat& reference) {
  if (q.coeffs().dot(reference.coeffs()) < 0.0) {
    return Quat(-q.w(), -q.x(), -q.y(), -q.z());
  }
  return q;
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Eigen::Matrix3d so3_left_jacobian_inverse_transpose(const Eigen::Vector3d& phi) {
  const double theta = phi.norm();
  const Eigen::Matrix3d k = skew(phi);
  double c;
  if (theta < 1e-4) {
    const double t2 = theta * theta;
    c = 1.0 / 12.0 + t2 / 720.0;
  } else {
    c = 1.0 / (theta * theta) -
        (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta));
  }
  return Eigen::Matrix3d::Identity() + 0.5 * k + c * k * k;
}

}  // namespace myotrack
