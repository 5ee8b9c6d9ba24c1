#include "myotrack/dynamics.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "myotrack/errors.hpp"
#include "myotrack/muscle.hpp"

namespace myotrack {
namespace {

const Pose kIdentityPose{};
const Twist kZeroTwist{};

const Pose& pose_of(const ModelState& s, int body) {
  return body == kBase ? kIdentityPose : s.poses[body];
}

const Twist& twist_of(const ModelState& s, int body) {
  return body == kBase ? kZeroTwist : s.twists[body];
}

Eigen::Vector3d world_point(const Pose& pose, const Eigen::Vector3d& local) {
  return pose.position + pose.orientation * local;
}

Eigen::Vector3d point_velocity(const Pose& pose, const Twist& twist, const Eigen::Vector3d& world) {
  return twist.linear + twist.angular.cross(world - pose.position);
}

struct SpringFrames {
  Eigen::Matrix3d rot_a;       // R_A
  Eigen::Matrix3d rot_a_rest;  // R_A * R0
  Eigen::Vector3d x_a;
  Eigen::Vector3d x_b;
  Vector6d displacement;
};

SpringFrames spring_frames(const FrameSpring& s, const Pose& pa, const Pose& pb) {
  SpringFrames f;
  f.rot_a = pa.orientation.toRotationMatrix();
  f.rot_a_rest = f.rot_a * s.rest_offset.orientation.toRotationMatrix();
  f.x_a = world_point(pa, s.attach_a);
  f.x_b = world_point(pb, s.attach_b);
  const Eigen::Vector3d translation =
      f.rot_a.transpose() * (f.x_b - f.x_a) - s.rest_offset.position;
  const Quat residual =
      s.rest_offset.orientation.conjugate() * pa.orientation.conjugate() * pb.orientation;
  f.displacement << translation, log_map(residual);
  return f;
}

void check_finite(const ModelState& s) {
  for (std::size_t i = 0; i < s.poses.size(); ++i) {
    const bool ok = s.poses[i].position.allFinite() && s.poses[i].orientation.coeffs().allFinite() &&
                    s.twists[i].linear.allFinite() && s.twists[i].angular.allFinite();
    if (!ok) {
      throw SimulationDiverged("non-finite state in body " + std::to_string(i) + " at t=" +
                               std::to_string(s.time));
    }
  }
}

}  // namespace

Vector6d spring_displacement(const FrameSpring& spring, const Pose& pose_a, const Pose& pose_b) {
  return spring_frames(spring, pose_a, pose_b).displacement;
}

double spring_energy(const FrameSpring& spring, const Pose& pose_a, const Pose& pose_b) {
  const Vector6d d = spring_displacement(spring, pose_a, pose_b);
  return 0.5 * d.dot(spring.stiffness.cwiseProduct(d));
}

SpringWrench spring_wrench(const FrameSpring& spring, const Pose& pose_a, const Pose& pose_b,
                           const Twist& twist_a, const Twist& twist_b) {
  const SpringFrames f = spring_frames(spring, pose_a, pose_b);
  const Eigen::Vector3d e_t = f.displacement.head<3>();
  const Eigen::Vector3d e_r = f.displacement.tail<3>();

  Eigen::Vector3d force = -f.rot_a * spring.stiffness.head<3>().cwiseProduct(e_t);
  Eigen::Vector3d torque = -f.rot_a_rest * (so3_left_jacobian_inverse_transpose(e_r) *
                                             spring.stiffness.tail<3>().cwiseProduct(e_r));

  const Eigen::Vector3d v_rel =
      f.rot_a.transpose() *
      (point_velocity(pose_b, twist_b, f.x_b) - point_velocity(pose_a, twist_a, f.x_b));
  const Eigen::Vector3d w_rel = f.rot_a_rest.transpose() * (twist_b.angular - twist_a.angular);
  force -= f.rot_a * spring.damping.head<3>().cwiseProduct(v_rel);
  torque -= f.rot_a_rest * spring.damping.tail<3>().cwiseProduct(w_rel);

  SpringWrench w;
  w.point = f.x_b;
  w.on_b = {force, torque};
  w.on_a = {-force, -torque};
  return w;
}

MuscleGeometry muscle_geometry(const ChainModel& model, const ModelState& state, int k) {
  const Muscle& m = model.muscles.at(k);
  const Pose& po = pose_of(state, m.origin_body);
  const Pose& pi = pose_of(state, m.insertion_body);
  const Eigen::Vector3d xo = world_point(po, m.origin_point);
  const Eigen::Vector3d xi = world_point(pi, m.insertion_point);
  const Eigen::Vector3d d = xi - xo;
  MuscleGeometry g;
  g.length = d.norm();
  if (!(g.length > 1e-12)) {
    throw InvalidArgument("muscle " + std::to_string(k) + ": coincident attachment points");
  }
  g.direction = d / g.length;
  const Eigen::Vector3d vo = point_velocity(po, twist_of(state, m.origin_body), xo);
  const Eigen::Vector3d vi = point_velocity(pi, twist_of(state, m.insertion_body), xi);
  g.lengthening_velocity = g.direction.dot(vi - vo);
  return g;
}

double muscle_tension(const ChainModel& model, const ModelState& state, int k, double excitation) {
  const Muscle& m = model.muscles.at(k);
  const MuscleGeometry g = muscle_geometry(model, state, k);
  return muscle_force(m, excitation, normalized_fiber_length(m, g.length),
                      normalized_fiber_velocity(m, g.lengthening_velocity));
}

ModelState step(const ChainModel& model, const ModelState& state,
                std::span<const double> excitations, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  if (static_cast<int>(excitations.size()) != model.num_muscles()) {
    throw InvalidArgument("excitation vector length " + std::to_string(excitations.size()) +
                          " != muscle count " + std::to_string(model.num_muscles()));
  }
  for (double a : excitations) {
    if (!(a >= 0.0 && a <= 1.0)) throw InvalidArgument("excitation must lie in [0, 1]");
  }
  check_finite(state);

  const int n = model.num_bodies();
  const int dofs = 6 * n;
  const double h = dt / model.substeps;
  ModelState s = state;

  // Generalized coordinates per body: [linear; angular], world frame, forces
  // referred to the center of mass.
  Eigen::VectorXd gen_force(dofs);
  Eigen::MatrixXd damping(dofs, dofs);
  Eigen::MatrixXd system(dofs, dofs);

  auto apply = [&](int body, const Eigen::Vector3d& f, const Eigen::Vector3d& tau,
                   const Eigen::Vector3d& at) {
    if (body == kBase) return;
    gen_force.segment<3>(6 * body) += f;
    gen_force.segment<3>(6 * body + 3) += tau + (at - s.poses[body].position).cross(f);
  };

  // Velocity Jacobian block of a point rigidly attached to `body`.
  auto point_jacobian = [&](int body, const Eigen::Vector3d& at) {
    Eigen::Matrix<double, 3, 6> j;
    j << Eigen::Matrix3d::Identity(), -skew(at - s.poses[body].position);
    return j;
  };

  for (int sub = 0; sub < model.substeps; ++sub) {
    gen_force.setZero();
    damping.setZero();
    for (int i = 0; i < n; ++i) {
      gen_force.segment<3>(6 * i) = model.bodies[i].mass * model.gravity;
    }
    for (const auto& load : model.external_loads) {
      gen_force.segment<3>(6 * load.body) += load.force;
      gen_force.segment<3>(6 * load.body + 3) += load.torque;
    }

    for (const auto& spring : model.springs) {
      const SpringWrench w =
          spring_wrench(spring, pose_of(s, spring.body_a), pose_of(s, spring.body_b),
                        twist_of(s, spring.body_a), twist_of(s, spring.body_b));
      apply(spring.body_b, w.on_b.force, w.on_b.torque, w.point);
      apply(spring.body_a, w.on_a.force, w.on_a.torque, w.point);

      // Relative-velocity Jacobian blocks G_a, G_b so that the damping
      // wrench equals -G^T C G v.
      const Eigen::Matrix3d rot_a = pose_of(s, spring.body_a).orientation.toRotationMatrix();
      const Eigen::Matrix3d rot_ar = rot_a * spring.rest_offset.orientation.toRotationMatrix();
      const int bodies[2] = {spring.body_a, spring.body_b};
      Eigen::Matrix<double, 6, 6> g[2];
      for (int side = 0; side < 2; ++side) {
        if (bodies[side] == kBase) continue;
        g[side].setZero();
        g[side].topRows<3>() = rot_a.transpose() * point_jacobian(bodies[side], w.point);
        g[side].block<3, 3>(3, 3) = rot_ar.transpose();
        if (side == 0) g[side] = -g[side];
      }
      const Vector6d c = spring.damping;
      for (int x = 0; x < 2; ++x) {
        if (bodies[x] == kBase) continue;
        for (int y = 0; y < 2; ++y) {
          if (bodies[y] == kBase) continue;
          damping.block<6, 6>(6 * bodies[x], 6 * bodies[y]) +=
              g[x].transpose() * c.asDiagonal() * g[y];
        }
      }
    }

    for (int k = 0; k < model.num_muscles(); ++k) {
      const Muscle& m = model.muscles[k];
      const MuscleGeometry geo = muscle_geometry(model, s, k);
      const double nl = normalized_fiber_length(m, geo.length);
      const double nv = normalized_fiber_velocity(m, geo.lengthening_velocity);
      const double tension = muscle_force(m, excitations[k], nl, nv);
      if (tension == 0.0) continue;
      const Eigen::Vector3d pull = tension * geo.direction;
      const Eigen::Vector3d xo = world_point(pose_of(s, m.origin_body), m.origin_point);
      const Eigen::Vector3d xi = world_point(pose_of(s, m.insertion_body), m.insertion_point);
      apply(m.insertion_body, -pull, Eigen::Vector3d::Zero(), xi);
      apply(m.origin_body, pull, Eigen::Vector3d::Zero(), xo);

      const double slope = muscle_damping(m, excitations[k], nl, nv);
      if (slope <= 0.0) continue;
      const int bodies[2] = {m.origin_body, m.insertion_body};
      const Eigen::Vector3d points[2] = {xo, xi};
      Eigen::Matrix<double, 1, 6> row[2];
      for (int side = 0; side < 2; ++side) {
        if (bodies[side] == kBase) continue;
        row[side] = geo.direction.transpose() * point_jacobian(bodies[side], points[side]);
        if (side == 0) row[side] = -row[side];
      }
      for (int x = 0; x < 2; ++x) {
        if (bodies[x] == kBase) continue;
        for (int y = 0; y < 2; ++y) {
          if (bodies[y] == kBase) continue;
          damping.block<6, 6>(6 * bodies[x], 6 * bodies[y]) +=
              slope * row[x].transpose() * row[y];
        }
      }
    }

    // Velocity-dependent forces are integrated linearly-implicitly:
    // (M + h D) dv = h F(x, v). Elastic and external forces stay explicit.
    system = h * damping;
    for (int i = 0; i < n; ++i) {
      const Eigen::Matrix3d rot = s.poses[i].orientation.toRotationMatrix();
      const Eigen::Matrix3d inertia_world = rot * model.bodies[i].inertia * rot.transpose();
      const Eigen::Vector3d& w = s.twists[i].angular;
      gen_force.segment<3>(6 * i + 3) -= w.cross(inertia_world * w);
      system.block<3, 3>(6 * i, 6 * i).diagonal().array() += model.bodies[i].mass;
      system.block<3, 3>(6 * i + 3, 6 * i + 3) += inertia_world;
    }
    const Eigen::VectorXd dv = system.ldlt().solve(h * gen_force);

    for (int i = 0; i < n; ++i) {
      Twist& twist = s.twists[i];
      twist.linear += dv.segment<3>(6 * i);
      twist.angular += dv.segment<3>(6 * i + 3);
      Pose& pose = s.poses[i];
      pose.position += h * twist.linear;
      pose.orientation = renormalized(exp_map(h * twist.angular) * pose.orientation);
    }
    s.time += h;
  }
  check_finite(s);
  return s;
}

EnergyBreakdown mechanical_energy(const ChainModel& model, const ModelState& state) {
  EnergyBreakdown e;
  for (int i = 0; i < model.num_bodies(); ++i) {
    const RigidBody& b = model.bodies[i];
    const Eigen::Matrix3d rot = state.poses[i].orientation.toRotationMatrix();
    const Eigen::Vector3d w = state.twists[i].angular;
    e.kinetic += 0.5 * b.mass * state.twists[i].linear.squaredNorm() +
                 0.5 * w.dot(rot * b.inertia * rot.transpose() * w);
    e.gravitational -= b.mass * model.gravity.dot(state.poses[i].position - b.rest_pose.position);
  }
  for (const auto& load : model.external_loads) {
    const auto& b = model.bodies[load.body];
    e.gravitational -= load.force.dot(state.poses[load.body].position - b.rest_pose.position);
  }
  for (const auto& spring : model.springs) {
    e.spring += spring_energy(spring, pose_of(state, spring.body_a), pose_of(state, spring.body_b));
  }
  for (int k = 0; k < model.num_muscles(); ++k) {
    e.muscle_passive +=
        muscle_passive_energy(model.muscles[k], muscle_geometry(model, state, k).length);
  }
  return e;
}

Eigen::VectorXd pose_features(const ModelState& state, bool include_positions) {
  const int n = static_cast<int>(state.poses.size());
  Eigen::VectorXd u(include_positions ? 7 * n : 4 * n);
  for (int i = 0; i < n; ++i) {
    u.segment<4>(4 * i) = to_wxyz(canonical(state.poses[i].orientation));
  }
  if (include_positions) {
    for (int i = 0; i < n; ++i) u.segment<3>(4 * n + 3 * i) = state.poses[i].position;
  }
  return u;
}

Sensitivity sensitivity(const ChainModel& model, const ModelState& state,
                        std::span<const double> excitations_prev, double dt,
                        bool include_positions) {
  const int m = model.num_muscles();
  if (static_cast<int>(excitations_prev.size()) != m) {
    throw InvalidArgument("previous excitation vector has wrong length");
  }
  std::vector<double> probe(m, 0.0);
  auto run = [&] { return pose_features(step(model, state, probe, dt), include_positions); };
  Sensitivity out;
  out.u0 = run();
  out.lambda.resize(out.u0.size(), m);
  for (int j = 0; j < m; ++j) {
    probe[j] = 1.0;
    out.lambda.col(j) = run() - out.u0;
    probe[j] = 0.0;
  }
  return out;
}

}  // namespace myotrack
