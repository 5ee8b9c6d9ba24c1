#include "myotrack/checkpoint.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "myotrack/errors.hpp"

namespace myotrack {
namespace {

using nlohmann::json;

json vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json spec_json(const MlpSpec& s) {
  return {{"layers", s.layer_sizes},
          {"activation", s.hidden_activation == Activation::kTanh ? "tanh" : "identity"}};
}

MlpSpec spec_from(const json& j) {
  MlpSpec s;
  s.layer_sizes = j.at("layers").get<std::vector<int>>();
  const auto act = j.at("activation").get<std::string>();
  if (act == "tanh") {
    s.hidden_activation = Activation::kTanh;
  } else if (act == "identity") {
    s.hidden_activation = Activation::kIdentity;
  } else {
    throw Error("checkpoint: unknown activation '" + act + "'");
  }
  return s;
}

json adam_json(const AdamState& a) {
  return {{"m", vec(a.m)}, {"v", vec(a.v)}, {"step", a.step},
          {"beta1", a.beta1}, {"beta2", a.beta2}, {"eps", a.eps}};
}

AdamState adam_from(const json& j, Eigen::Index n) {
  AdamState a;
  a.m = vec(j.at("m"));
  a.v = vec(j.at("v"));
  a.step = j.at("step").get<long>();
  a.beta1 = j.at("beta1").get<double>();
  a.beta2 = j.at("beta2").get<double>();
  a.eps = j.at("eps").get<double>();
  if (a.m.size() != n || a.v.size() != n) throw Error("checkpoint: Adam state size mismatch");
  return a;
}

}  // namespace

void save_checkpoint(const Checkpoint& c, const std::string& path) {
  json j;
  j["format"] = "myotrack-checkpoint";
  j["version"] = Checkpoint::kVersion;
  j["policy"] = {{"spec", spec_json(c.policy.net().spec())}, {"params", vec(c.policy.params())}};
  j["value"] = {{"spec", spec_json(c.value.net().spec())}, {"params", vec(c.value.params())}};
  j["policy_adam"] = adam_json(c.policy_adam);
  j["value_adam"] = adam_json(c.value_adam);
  j["normalizer"] = {{"enabled", c.use_normalizer},
                     {"mean", vec(c.normalizer.mean())},
                     {"var", vec(c.normalizer.var())},
                     {"count", c.normalizer.count()},
                     {"clip", c.normalizer.clip()}};
  j["env_steps"] = c.env_steps;
  j["updates"] = c.updates;
  j["decay_start"] = c.decay_start;

  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw Error("cannot write checkpoint " + path);
    out << j.dump();
    if (!out) throw Error("cannot write checkpoint " + path);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open checkpoint " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error("checkpoint " + path + " is not valid JSON: " + e.what());
  }
  try {
    if (j.value("format", "") != "myotrack-checkpoint") throw Error("not a myotrack checkpoint");
    const int version = j.at("version").get<int>();
    if (version != Checkpoint::kVersion) {
      throw Error("unsupported checkpoint version " + std::to_string(version));
    }
    Checkpoint c;
    c.policy = GaussianPolicy(spec_from(j.at("policy").at("spec")), 0);
    const Eigen::VectorXd pp = vec(j.at("policy").at("params"));
    if (pp.size() != c.policy.num_params()) throw Error("policy parameter count mismatch");
    c.policy.params() = pp;
    c.value = ValueNet(spec_from(j.at("value").at("spec")), 0);
    const Eigen::VectorXd vp = vec(j.at("value").at("params"));
    if (vp.size() != c.value.num_params()) throw Error("value parameter count mismatch");
    c.value.params() = vp;
    c.policy_adam = adam_from(j.at("policy_adam"), pp.size());
    c.value_adam = adam_from(j.at("value_adam"), vp.size());
    const json& n = j.at("normalizer");
    c.use_normalizer = n.at("enabled").get<bool>();
    c.normalizer = RunningNormalizer(c.policy.obs_dim(), n.at("clip").get<double>());
    c.normalizer.set_state(vec(n.at("mean")), vec(n.at("var")), n.at("count").get<double>());
    if (c.normalizer.dim() != c.policy.obs_dim()) throw Error("normalizer size mismatch");
    c.env_steps = j.at("env_steps").get<long>();
    c.updates = j.at("updates").get<long>();
    c.decay_start = j.at("decay_start").get<long>();
    return c;
  } catch (const json::exception& e) {
    throw Error("checkpoint " + path + " is malformed: " + e.what());
  } catch (const InvalidArgument& e) {
    throw Error("checkpoint " + path + " is malformed: " + e.what());
  }
}

}  // namespace myotrack
