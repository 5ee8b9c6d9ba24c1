#include "myotrack/spine_env.hpp"

#include <numbers>

#include "myotrack/errors.hpp"

namespace myotrack {
namespace {

double deg(double d) { return d * std::numbers::pi / 180.0; }

}  // namespace

void EnvConfig::validate() const {
  if (!(reach_threshold > 0.0)) throw InvalidArgument("reach_threshold must be positive");
  if (max_steps < 1) throw InvalidArgument("max_steps must be >= 1");
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  if (!(flexion_deg >= 0.0 && lateral_deg >= 0.0 && axial_deg >= 0.0)) {
    throw InvalidArgument("target domain half-widths must be nonnegative");
  }
  weights.validate();
}

TargetSpec target_from_top(const Quat& top, int n) {
  TargetSpec t;
  for (int j = 0; j < n; ++j) {
    t.orientations.push_back(slerp_from_identity(top, static_cast<double>(j + 1) / n));
  }
  return t;
}

TargetSpec sample_target(std::mt19937_64& rng, const EnvConfig& c, int num_bodies) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double fx = deg(c.flexion_deg) * u(rng);
  const double ly = deg(c.lateral_deg) * u(rng);
  const double az = deg(c.axial_deg) * u(rng);
  const Quat top = Eigen::AngleAxisd(az, Eigen::Vector3d::UnitZ()) *
                   Eigen::AngleAxisd(ly, Eigen::Vector3d::UnitY()) *
                   Eigen::AngleAxisd(fx, Eigen::Vector3d::UnitX());
  return target_from_top(canonical(top), num_bodies);
}

double distance_sq(const ModelState& state, const TargetSpec& target) {
  if (state.poses.size() != target.orientations.size()) {
    throw InvalidArgument("target has wrong number of bodies");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < state.poses.size(); ++i) {
    const Quat& t = target.orientations[i];
    sum += (to_wxyz(sign_aligned(state.poses[i].orientation, t)) - to_wxyz(t)).squaredNorm();
  }
  return sum;
}

double reward(const ModelState& state, const TargetSpec& target, const Eigen::VectorXd& a,
              const Eigen::VectorXd& a_prev, const EnvConfig& c) {
  const double d2 = distance_sq(state, target);
  const double phi_u = d2 / (2.0 * c.weights.delta_t);
  const double phi_d = 0.5 * (a - a_prev).squaredNorm();
  const double phi_r = 0.5 * a.squaredNorm();
  const double bonus = d2 < c.reach_threshold ? c.bonus : 0.0;
  return bonus - c.weights.w_u * phi_u - c.weights.w_d * phi_d - c.weights.w_r * phi_r;
}

SpineEnv::SpineEnv(ChainModel model, EnvConfig config)
    : model_(std::move(model)), config_(std::move(config)) {
  model_.validate();
  config_.validate();
  state_ = rest_state(model_);
  a_prev_ = Eigen::VectorXd::Zero(model_.num_muscles());
  target_ = target_from_top(Quat::Identity(), model_.num_bodies());
}

int SpineEnv::obs_dim() const {
  return (config_.include_target ? 8 : 4) * model_.num_bodies();
}

Eigen::VectorXd SpineEnv::observation() const {
  const int n = model_.num_bodies();
  Eigen::VectorXd obs(obs_dim());
  for (int i = 0; i < n; ++i) obs.segment<4>(4 * i) = to_wxyz(canonical(state_.poses[i].orientation));
  if (config_.include_target) {
    for (int i = 0; i < n; ++i) obs.segment<4>(4 * (n + i)) = to_wxyz(target_.orientations[i]);
  }
  return obs;
}

Eigen::VectorXd SpineEnv::reset(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return reset_to(sample_target(rng, config_, model_.num_bodies()));
}

Eigen::VectorXd SpineEnv::reset_to(const TargetSpec& target) {
  if (static_cast<int>(target.orientations.size()) != model_.num_bodies()) {
    throw InvalidArgument("target has wrong number of bodies");
  }
  state_ = rest_state(model_);
  target_ = target;
  a_prev_.setZero();
  steps_ = 0;
  done_ = false;
  return observation();
}

StepResult SpineEnv::step(const Eigen::VectorXd& action) {
  if (done_) throw Error("episode is over; call reset");
  if (action.size() != act_dim()) {
    throw InvalidArgument("action length " + std::to_string(action.size()) + " != " +
                          std::to_string(act_dim()));
  }
  if (!action.allFinite()) throw InvalidArgument("action must be finite");
  const Eigen::VectorXd a = action.cwiseMax(0.0).cwiseMin(1.0);
  state_ = myotrack::step(model_, state_, std::span<const double>(a.data(), a.size()), config_.dt);
  ++steps_;

  StepResult r;
  r.info.distance_sq = distance_sq(state_, target_);
  r.info.activation_norm = a.norm();
  r.info.activation_delta = (a - a_prev_).norm();
  r.reward = reward(state_, target_, a, a_prev_, config_);
  if (config_.terminate_on_reach && r.info.distance_sq < config_.reach_threshold) {
    r.terminal = true;
    r.info.reason = "reached";
  } else if (steps_ >= config_.max_steps) {
    r.terminal = true;
    r.info.reason = "step_limit";
  }
  a_prev_ = a;
  done_ = r.terminal;
  r.observation = observation();
  return r;
}

}  // namespace myotrack
