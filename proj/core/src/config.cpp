#include "myotrack/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "myotrack/errors.hpp"

namespace myotrack {
namespace {

using nlohmann::json;

// Reads fields of one object and rejects keys nobody asked for.
class Section {
 public:
  Section(const json& parent, const std::string& name) : name_(name) {
    if (!parent.contains(name)) return;
    node_ = &parent.at(name);
    if (!node_->is_object()) throw InvalidArgument("config section '" + name + "' must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (node_ == nullptr || !node_->contains(key)) return;
    try {
      out = node_->at(key).get<T>();
    } catch (const json::exception& e) {
      throw InvalidArgument("config " + name_ + "." + key + ": " + e.what());
    }
  }

  void get_vec(const char* key, Eigen::Ref<Eigen::VectorXd> out) {
    std::vector<double> v;
    get(key, v);
    if (node_ == nullptr || !node_->contains(key)) return;
    if (static_cast<Eigen::Index>(v.size()) != out.size()) {
      throw InvalidArgument("config " + name_ + "." + key + " must have " +
                            std::to_string(out.size()) + " entries");
    }
    for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  }

  void finish() const {
    if (node_ == nullptr) return;
    for (const auto& [k, v] : node_->items()) {
      if (!seen_.count(k)) throw InvalidArgument("unknown config key " + name_ + "." + k);
    }
  }

 private:
  std::string name_;
  const json* node_ = nullptr;
  std::set<std::string> seen_;
};

void read_weights(Section& s, const char* prefix, CostWeights& w) {
  const std::string p(prefix);
  s.get((p + "w_u").c_str(), w.w_u);
  s.get((p + "w_d").c_str(), w.w_d);
  s.get((p + "w_r").c_str(), w.w_r);
  s.get((p + "delta_t").c_str(), w.delta_t);
}

}  // namespace

AppConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw InvalidArgument("config root must be an object");
  for (const auto& [k, v] : root.items()) {
    if (k != "model" && k != "env" && k != "fdat" && k != "train" && k != "eval") {
      throw InvalidArgument("unknown config section '" + k + "'");
    }
  }

  AppConfig c;
  {
    Section s(root, "model");
    ChainConfig& m = c.model;
    s.get("num_bodies", m.num_bodies);
    s.get("muscles_per_level", m.muscles_per_level);
    s.get("body_mass", m.body_mass);
    s.get_vec("body_inertia", m.body_inertia);
    s.get("masses", m.masses);
    s.get("level_height", m.level_height);
    s.get_vec("stiffness", m.stiffness);
    s.get("damping_ratio", m.damping_ratio);
    s.get("muscle_radius", m.muscle_radius);
    s.get("muscle_twist", m.muscle_twist);
    s.get("max_iso_force", m.max_iso_force);
    s.get("tendon_ratio", m.tendon_ratio);
    s.get("pennation", m.pennation);
    std::string mode = m.muscle_mode == MuscleMode::kHill ? "hill" : "linear";
    s.get("muscle_mode", mode);
    if (mode == "hill") {
      m.muscle_mode = MuscleMode::kHill;
    } else if (mode == "linear") {
      m.muscle_mode = MuscleMode::kLinear;
    } else {
      throw InvalidArgument("model.muscle_mode must be 'hill' or 'linear'");
    }
    s.get_vec("gravity", m.gravity);
    s.get("substeps", m.substeps);
    s.finish();
  }
  {
    Section s(root, "env");
    EnvConfig& e = c.env;
    s.get("reach_threshold", e.reach_threshold);
    s.get("max_steps", e.max_steps);
    s.get("bonus", e.bonus);
    read_weights(s, "", e.weights);
    s.get("flexion_deg", e.flexion_deg);
    s.get("lateral_deg", e.lateral_deg);
    s.get("axial_deg", e.axial_deg);
    s.get("include_target", e.include_target);
    s.get("terminate_on_reach", e.terminate_on_reach);
    s.get("dt", e.dt);
    s.finish();
    e.validate();
  }
  c.fdat.dt = c.env.dt;
  {
    Section s(root, "fdat");
    read_weights(s, "", c.fdat_weights);
    s.get("include_positions", c.fdat.include_positions);
    s.get("max_pivots", c.fdat.lcp.max_pivots);
    s.get("tol", c.fdat.lcp.tol);
    s.finish();
    c.fdat_weights.validate();
  }
  {
    Section s(root, "train");
    TrainOptions& t = c.train;
    PpoConfig& p = t.ppo;
    s.get("total_steps", t.total_steps);
    s.get("seed", t.seed);
    s.get("checkpoint_every", t.checkpoint_every);
    s.get("policy_hidden", t.policy_hidden);
    s.get("value_hidden", t.value_hidden);
    s.get("clip_eps", p.clip_eps);
    s.get("stab_beta", p.stab_beta);
    s.get("entropy_coef", p.entropy_coef);
    s.get("value_coef", p.value_coef);
    s.get("lr", p.lr);
    s.get("gamma", p.gamma);
    s.get("gae_tau", p.gae_tau);
    s.get("minibatch_size", p.minibatch_size);
    s.get("steps_per_env", p.steps_per_env);
    s.get("epochs", p.epochs);
    s.get("num_envs", p.num_envs);
    s.get("max_grad_norm", p.max_grad_norm);
    s.get("decay_trigger", p.decay_trigger);
    s.get("decay_window", p.decay_window);
    s.get("decay_floor", p.decay_floor);
    s.get("normalize_observations", p.normalize_observations);
    s.get("bootstrap_truncation", p.bootstrap_truncation);
    s.get("min_log_std", p.min_log_std);
    s.get("max_log_std", p.max_log_std);
    s.finish();
    p.validate();
    if (t.total_steps < 0) throw InvalidArgument("train.total_steps must be >= 0");
  }
  {
    Section s(root, "eval");
    s.get("trials", c.eval.trials);
    s.get("samples", c.eval.samples);
    s.get("seed", c.eval.seed);
    s.finish();
    c.eval.validate();
  }
  build_chain(c.model).validate();
  return c;
}

AppConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const AppConfig& c) {
  auto vec = [](const auto& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  auto weights = [](json& j, const CostWeights& w) {
    j["w_u"] = w.w_u;
    j["w_d"] = w.w_d;
    j["w_r"] = w.w_r;
    j["delta_t"] = w.delta_t;
  };
  json j;
  const ChainConfig& m = c.model;
  j["model"] = {{"num_bodies", m.num_bodies},
                {"muscles_per_level", m.muscles_per_level},
                {"body_mass", m.body_mass},
                {"body_inertia", vec(m.body_inertia)},
                {"masses", m.masses},
                {"level_height", m.level_height},
                {"stiffness", vec(m.stiffness)},
                {"damping_ratio", m.damping_ratio},
                {"muscle_radius", m.muscle_radius},
                {"muscle_twist", m.muscle_twist},
                {"max_iso_force", m.max_iso_force},
                {"tendon_ratio", m.tendon_ratio},
                {"pennation", m.pennation},
                {"muscle_mode", m.muscle_mode == MuscleMode::kHill ? "hill" : "linear"},
                {"gravity", vec(m.gravity)},
                {"substeps", m.substeps}};
  const EnvConfig& e = c.env;
  j["env"] = {{"reach_threshold", e.reach_threshold}, {"max_steps", e.max_steps},
              {"bonus", e.bonus},                     {"flexion_deg", e.flexion_deg},
              {"lateral_deg", e.lateral_deg},         {"axial_deg", e.axial_deg},
              {"include_target", e.include_target},   {"terminate_on_reach", e.terminate_on_reach},
              {"dt", e.dt}};
  weights(j["env"], e.weights);
  j["fdat"] = {{"include_positions", c.fdat.include_positions},
               {"max_pivots", c.fdat.lcp.max_pivots},
               {"tol", c.fdat.lcp.tol}};
  weights(j["fdat"], c.fdat_weights);
  const TrainOptions& t = c.train;
  const PpoConfig& p = t.ppo;
  j["train"] = {{"total_steps", t.total_steps},
                {"seed", t.seed},
                {"checkpoint_every", t.checkpoint_every},
                {"policy_hidden", t.policy_hidden},
                {"value_hidden", t.value_hidden},
                {"clip_eps", p.clip_eps},
                {"stab_beta", p.stab_beta},
                {"entropy_coef", p.entropy_coef},
                {"value_coef", p.value_coef},
                {"lr", p.lr},
                {"gamma", p.gamma},
                {"gae_tau", p.gae_tau},
                {"minibatch_size", p.minibatch_size},
                {"steps_per_env", p.steps_per_env},
                {"epochs", p.epochs},
                {"num_envs", p.num_envs},
                {"max_grad_norm", p.max_grad_norm},
                {"decay_trigger", p.decay_trigger},
                {"decay_window", p.decay_window},
                {"decay_floor", p.decay_floor},
                {"normalize_observations", p.normalize_observations},
                {"bootstrap_truncation", p.bootstrap_truncation},
                {"min_log_std", p.min_log_std},
                {"max_log_std", p.max_log_std}};
  j["eval"] = {{"trials", c.eval.trials}, {"samples", c.eval.samples}, {"seed", c.eval.seed}};
  return j.dump(2);
}

}  // namespace myotrack
