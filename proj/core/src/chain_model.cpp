#include "myotrack/chain_model.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>

#include "myotrack/errors.hpp"
#include "myotrack/muscle.hpp"

namespace myotrack {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument(what);
}

bool is_spd(const Eigen::Matrix3d& m) {
  if (!m.isApprox(m.transpose(), 1e-12)) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(m);
  return eig.eigenvalues().minCoeff() > 0.0;
}

}  // namespace

void ChainModel::validate() const {
  const int n = num_bodies();
  require(n >= 1, "chain needs at least one body");
  require(num_muscles() >= 1, "chain needs at least one muscle");
  require(substeps >= 1, "substeps must be >= 1");
  for (int i = 0; i < n; ++i) {
    const auto& b = bodies[i];
    require(b.mass > 0.0 && std::isfinite(b.mass),
            "body " + std::to_string(i) + ": mass must be positive");
    require(is_spd(b.inertia),
            "body " + std::to_string(i) + ": inertia must be symmetric positive definite");
  }
  require(static_cast<int>(springs.size()) == n,
          "chain topology needs exactly one spring per body");
  for (int i = 0; i < n; ++i) {
    const auto& s = springs[i];
    require(s.body_b == i && s.body_a == i - 1,
            "spring " + std::to_string(i) + " must connect body " +
                std::to_string(i - 1) + " to body " + std::to_string(i));
    require((s.stiffness.array() >= 0.0).all() && (s.damping.array() >= 0.0).all(),
            "spring " + std::to_string(i) + ": stiffness and damping must be >= 0");
  }
  for (int k = 0; k < num_muscles(); ++k) {
    const auto& m = muscles[k];
    const std::string tag = "muscle " + std::to_string(k) + ": ";
    require(m.origin_body >= kBase && m.origin_body < n, tag + "origin body out of range");
    require(m.insertion_body >= kBase && m.insertion_body < n,
            tag + "insertion body out of range");
    require(m.max_iso_force > 0.0, tag + "max isometric force must be positive");
    require(m.opt_fiber_length > 0.0, tag + "optimal fiber length must be positive");
    require(m.tendon_ratio >= 0.0 && m.tendon_ratio < 1.0, tag + "tendon ratio must be in [0, 1)");
    require(m.pennation >= 0.0 && m.pennation < std::numbers::pi / 2,
            tag + "pennation must be in [0, pi/2)");
  }
  for (const auto& load : external_loads) {
    require(load.body >= 0 && load.body < n, "external load body out of range");
  }
}

ModelState rest_state(const ChainModel& model) {
  ModelState s;
  s.poses.reserve(model.bodies.size());
  for (const auto& b : model.bodies) s.poses.push_back(b.rest_pose);
  s.twists.assign(model.bodies.size(), Twist{});
  return s;
}

ChainModel build_chain(const ChainConfig& c) {
  require(c.num_bodies >= 1, "num_bodies must be >= 1");
  require(!c.muscles.empty() || c.muscles_per_level >= 1, "muscles_per_level must be >= 1");
  require(c.level_height > 0.0, "level_height must be positive");
  require(c.masses.empty() || static_cast<int>(c.masses.size()) == c.num_bodies,
          "masses must list one value per body");
  require(c.inertias.empty() || static_cast<int>(c.inertias.size()) == c.num_bodies,
          "inertias must list one value per body");
  require(c.level_stiffness.empty() ||
              static_cast<int>(c.level_stiffness.size()) == c.num_bodies,
          "level_stiffness must list one value per level");
  require(c.level_damping.empty() || static_cast<int>(c.level_damping.size()) == c.num_bodies,
          "level_damping must list one value per level");
  require(c.damping_ratio >= 0.0, "damping_ratio must be >= 0");

  ChainModel model;
  model.gravity = c.gravity;
  model.external_loads = c.external_loads;
  model.substeps = c.substeps;

  const double h = c.level_height;
  for (int i = 0; i < c.num_bodies; ++i) {
    RigidBody b;
    b.mass = c.masses.empty() ? c.body_mass : c.masses[i];
    const Eigen::Vector3d diag = c.inertias.empty() ? c.body_inertia : c.inertias[i];
    require(b.mass > 0.0, "body " + std::to_string(i) + ": mass must be positive");
    require((diag.array() > 0.0).all(),
            "body " + std::to_string(i) + ": inertia must be positive");
    b.inertia = diag.asDiagonal();
    b.rest_pose.position = Eigen::Vector3d(0.0, 0.0, (i + 0.5) * h);
    model.bodies.push_back(b);

    FrameSpring s;
    s.body_a = i - 1;
    s.body_b = i;
    // The joint sits at the interface between consecutive bodies; the base
    // attachment is expressed in world coordinates.
    s.attach_a = (i == 0) ? Eigen::Vector3d::Zero() : Eigen::Vector3d(0.0, 0.0, 0.5 * h);
    s.attach_b = Eigen::Vector3d(0.0, 0.0, -0.5 * h);
    s.stiffness = c.level_stiffness.empty() ? c.stiffness : c.level_stiffness[i];
    require((s.stiffness.array() > 0.0).all(),
            "level " + std::to_string(i) + ": stiffness must be positive");
    s.damping = c.level_damping.empty() ? Vector6d(c.damping_ratio * s.stiffness)
                                        : c.level_damping[i];
    model.springs.push_back(s);
  }

  // Rest offsets are measured from the rest geometry with the same arithmetic
  // the spring uses, so the rest configuration is an exact equilibrium.
  for (auto& s : model.springs) {
    const Pose base{};
    const Pose& pa = (s.body_a == kBase) ? base : model.bodies[s.body_a].rest_pose;
    const Pose& pb = model.bodies[s.body_b].rest_pose;
    const Eigen::Vector3d xa = pa.position + pa.orientation * s.attach_a;
    const Eigen::Vector3d xb = pb.position + pb.orientation * s.attach_b;
    s.rest_offset.position = pa.orientation.toRotationMatrix().transpose() * (xb - xa);
    s.rest_offset.orientation = pa.orientation.conjugate() * pb.orientation;
  }

  if (!c.muscles.empty()) {
    model.muscles = c.muscles;
  } else {
    require(c.max_iso_force > 0.0, "max_iso_force must be positive");
    require(c.muscle_radius > 0.0, "muscle_radius must be positive");
    const int m = c.muscles_per_level;
    for (int level = 0; level < c.num_bodies; ++level) {
      for (int k = 0; k < m; ++k) {
        const double phi = 2.0 * std::numbers::pi * k / m;
        // Alternate the twist so that opposite pairs span axial rotation.
        const double twist = (m > 1) ? ((k % 2 == 0) ? c.muscle_twist : -c.muscle_twist) : 0.0;
        Muscle mu;
        mu.origin_body = level - 1;
        mu.insertion_body = level;
        const Eigen::Vector3d o(c.muscle_radius * std::cos(phi), c.muscle_radius * std::sin(phi),
                                0.0);
        const Eigen::Vector3d in(c.muscle_radius * std::cos(phi + twist),
                                 c.muscle_radius * std::sin(phi + twist), 0.0);
        mu.origin_point = (level == 0) ? Eigen::Vector3d(o + Eigen::Vector3d(0, 0, -0.5 * h)) : o;
        mu.insertion_point = in;
        mu.max_iso_force = c.max_iso_force;
        mu.tendon_ratio = c.tendon_ratio;
        mu.pennation = c.pennation;
        mu.mode = c.muscle_mode;
        // Optimal length is set so that the rest configuration is at the
        // plateau of the force-length curve with slack passive elements.
        const Eigen::Vector3d wo = (level == 0)
                                       ? mu.origin_point
                                       : Eigen::Vector3d(model.bodies[level - 1].rest_pose.position + o);
        const Eigen::Vector3d wi = model.bodies[level].rest_pose.position + in;
        const double rest_length = (wi - wo).norm();
        mu.opt_fiber_length = (1.0 - mu.tendon_ratio) * rest_length;
        // Keep the passive element exactly slack at rest despite rounding.
        while (normalized_fiber_length(mu, rest_length) > 1.0) {
          mu.opt_fiber_length = std::nextafter(mu.opt_fiber_length, 2.0 * mu.opt_fiber_length);
        }
        model.muscles.push_back(mu);
      }
    }
  }

  model.validate();
  return model;
}

}  // namespace myotrack
