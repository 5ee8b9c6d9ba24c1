#include <csignal>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "myotrack/config.hpp"
#include "myotrack/dynamics.hpp"
#include "myotrack/env_service.hpp"
#include "myotrack/errors.hpp"
#include "myotrack/evaluation.hpp"
#include "myotrack/metrics.hpp"
#include "myotrack/remote_env.hpp"
#include "myotrack/trainer.hpp"
#include "svg_plot.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace myotrack::tools {
namespace {

constexpr int kUsageError = 2;
constexpr int kRuntimeError = 1;

// Thrown for bad flag combinations found after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c, const std::string& out_help) {
  cmd->add_option("--config", c.config, "JSON configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "Random seed (overrides the config)");
  cmd->add_option("--out", c.out, out_help);
}

AppConfig load(const Common& c) {
  AppConfig cfg;
  try {
    cfg = c.config.empty() ? parse_config("{}") : load_config(c.config);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  if (c.seed) {
    cfg.train.seed = *c.seed;
    cfg.eval.seed = *c.seed;
  }
  return cfg;
}

void ensure_parent(const std::string& path) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

void write_text(const std::string& path, const std::string& text) {
  ensure_parent(path);
  std::ofstream out(path);
  if (!out || !(out << text)) throw Error("cannot write " + path);
}

std::pair<std::string, int> parse_host_port(const std::string& s) {
  const auto colon = s.rfind(':');
  if (colon == std::string::npos) throw UsageError("expected HOST:PORT, got '" + s + "'");
  try {
    return {s.substr(0, colon), std::stoi(s.substr(colon + 1))};
  } catch (const std::exception&) {
    throw UsageError("bad port in '" + s + "'");
  }
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  Common common;
  std::optional<long> steps;
  std::optional<int> envs;
  std::string remote;
  std::string resume;
};

int run_train(const TrainArgs& a) {
  AppConfig cfg = load(a.common);
  if (a.steps) cfg.train.total_steps = *a.steps;
  if (a.envs) cfg.train.ppo.num_envs = *a.envs;
  if (cfg.train.total_steps < 0) throw UsageError("--steps must be >= 0");
  cfg.train.ppo.validate();
  const std::string out = a.common.out.empty() ? "train_out" : a.common.out;
  fs::create_directories(out);
  cfg.train.checkpoint_dir = out;
  cfg.train.log_csv = (fs::path(out) / "train_log.csv").string();
  write_text((fs::path(out) / "config.json").string(), config_to_json(cfg));

  std::optional<Checkpoint> resume;
  if (!a.resume.empty()) resume = load_checkpoint(a.resume);

  EnvFactory factory;
  if (!a.remote.empty()) {
    const auto [host, port] = parse_host_port(a.remote);
    factory = [host, port](int) { return std::make_unique<RemoteEnv>(host, port); };
  } else {
    const ChainModel model = build_chain(cfg.model);
    factory = [model, env = cfg.env](int) { return std::make_unique<SpineEnv>(model, env); };
  }
  const TrainResult r = train(factory, cfg.train, resume);
  const auto& last = r.log.empty() ? TrainingLogRow{} : r.log.back();
  std::cout << json{{"checkpoint", (fs::path(out) / "final.json").string()},
                    {"env_steps", r.checkpoint.env_steps},
                    {"updates", r.checkpoint.updates},
                    {"success_rate", last.success_rate},
                    {"mean_return", last.mean_return}}
                   .dump()
            << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  Common common;
  std::string controller = "fdat";
  std::string checkpoint;
  std::optional<int> trials;
  std::optional<int> samples;
};

std::unique_ptr<Controller> make_controller(const std::string& kind, const std::string& checkpoint,
                                            const AppConfig& cfg) {
  if (kind == "fdat") return std::make_unique<FdatController>(cfg.fdat_weights, cfg.fdat);
  if (checkpoint.empty()) throw UsageError("--controller policy needs --checkpoint");
  return std::make_unique<PolicyController>(load_checkpoint(checkpoint));
}

int run_eval_cmd(const EvalArgs& a) {
  AppConfig cfg = load(a.common);
  if (a.trials) cfg.eval.trials = *a.trials;
  if (a.samples) cfg.eval.samples = *a.samples;
  try {
    cfg.eval.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  auto controller = make_controller(a.controller, a.checkpoint, cfg);
  const MetricsReport r = run_eval(build_chain(cfg.model), cfg.env, *controller, cfg.eval);
  const std::string out = a.common.out.empty() ? "report.csv" : a.common.out;
  write_report_csv(r, out);
  const TrialMetrics& s = r.summary;
  std::cout << json{{"controller", r.controller},
                    {"trials", r.trials.size()},
                    {"error_c", s.error_c},
                    {"error_s", s.error_s},
                    {"error_t", {s.error_t.mean, s.error_t.std}},
                    {"error_e", {s.error_e.mean, s.error_e.std}},
                    {"mean_step_time", s.mean_step_time},
                    {"report", out}}
                   .dump()
            << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct TrackArgs {
  Common common;
  int steps = 200;
};

int run_fdat_track(const TrackArgs& a) {
  const AppConfig cfg = load(a.common);
  if (a.steps < 1) throw UsageError("--steps must be >= 1");
  EnvConfig env_cfg = cfg.env;
  env_cfg.terminate_on_reach = false;
  env_cfg.max_steps = a.steps;
  SpineEnv env(build_chain(cfg.model), env_cfg);
  env.reset(cfg.eval.seed);
  FdatController fdat(cfg.fdat_weights, cfg.fdat);
  fdat.bind(env);

  const std::string out = a.common.out.empty() ? "fdat_track.csv" : a.common.out;
  ensure_parent(out);
  std::ofstream csv(out);
  if (!csv) throw Error("cannot write " + out);
  csv << std::setprecision(std::numeric_limits<double>::max_digits10);
  csv << "step,time,error_deg,distance_sq,activation_norm";
  for (int j = 0; j < env.act_dim(); ++j) csv << ",a" << j;
  csv << '\n';
  csv << 0 << ',' << 0.0 << ',' << pose_error_deg(env.state(), env.target()) << ','
      << distance_sq(env.state(), env.target()) << ',' << 0.0;
  for (int j = 0; j < env.act_dim(); ++j) csv << ',' << 0.0;
  csv << '\n';
  double final_err = pose_error_deg(env.state(), env.target());
  Eigen::VectorXd obs = env.observation();
  for (int k = 1; k <= a.steps; ++k) {
    const StepResult r = env.step(fdat.act(env, obs));
    obs = r.observation;
    final_err = pose_error_deg(env.state(), env.target());
    csv << k << ',' << env.state().time << ',' << final_err << ',' << r.info.distance_sq << ','
        << r.info.activation_norm;
    for (int j = 0; j < env.act_dim(); ++j) csv << ',' << env.last_action()(j);
    csv << '\n';
  }
  std::cout << json{{"steps", a.steps}, {"final_error_deg", final_err}, {"trajectory", out}}.dump()
            << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct ServeArgs {
  Common common;
  std::string bind = "127.0.0.1";
  std::optional<int> port;
  std::string model_config;
  std::string env_config;
  int max_sessions = 64;
  double idle_timeout = 300.0;
};

int run_serve(const ServeArgs& a) {
  AppConfig cfg = load(a.common);
  try {
    if (!a.model_config.empty()) cfg.model = load_config(a.model_config).model;
    if (!a.env_config.empty()) cfg.env = load_config(a.env_config).env;
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  ServiceOptions o;
  o.host = a.bind;
  o.port = resolve_port(a.port.value_or(8080));
  o.max_sessions = a.max_sessions;
  o.idle_timeout_seconds = a.idle_timeout;
  if (o.max_sessions < 1 || !(o.idle_timeout_seconds > 0.0)) {
    throw UsageError("--max-sessions and --idle-timeout must be positive");
  }

  // Block the shutdown signals before any thread starts so only sigwait sees them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  EnvService service(build_chain(cfg.model), cfg.env, o);
  const int port = service.start();
  const json ready{{"host", o.host}, {"port", port}};
  if (!a.common.out.empty()) write_text(a.common.out, ready.dump() + "\n");
  std::cout << ready.dump() << std::endl;

  int sig = 0;
  sigwait(&signals, &sig);
  spdlog::info("signal {} received, shutting down", sig);
  service.stop();
  return 0;
}

// ---------------------------------------------------------------------------

struct BenchArgs {
  Common common;
  int steps = 100;
  std::string checkpoint;
};

int run_bench(const BenchArgs& a) {
  const AppConfig cfg = load(a.common);
  if (a.steps < 1) throw UsageError("--steps must be >= 1");
  const ChainModel model = build_chain(cfg.model);
  SpineEnv probe(model, cfg.env);
  Checkpoint ckpt;
  if (!a.checkpoint.empty()) {
    ckpt = load_checkpoint(a.checkpoint);
  } else {
    ckpt.policy = GaussianPolicy(probe.obs_dim(), probe.act_dim(), cfg.train.seed);
    ckpt.normalizer = RunningNormalizer(probe.obs_dim());
  }
  FdatController fdat(cfg.fdat_weights, cfg.fdat);
  PolicyController policy(std::move(ckpt));
  const TimingResult t = timing_benchmark(model, cfg.env, fdat, policy, a.steps, cfg.eval.seed);
  const std::string line = json{{"steps", t.steps},
                                {"bodies", model.num_bodies()},
                                {"muscles", model.num_muscles()},
                                {"fdat_step_time", t.fdat_step_time},
                                {"policy_step_time", t.policy_step_time},
                                {"ratio", t.ratio}}
                               .dump();
  if (!a.common.out.empty()) write_text(a.common.out, line + "\n");
  std::cout << line << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct PlotArgs {
  Common common;
  std::vector<std::string> inputs;
};

std::vector<double> numeric_column(const CsvTable& t, int col, const std::vector<std::size_t>& rows) {
  std::vector<double> out;
  for (std::size_t r : rows) {
    try {
      out.push_back(std::stod(t.rows[r][static_cast<std::size_t>(col)]));
    } catch (const std::exception&) {
      out.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }
  return out;
}

int run_plot(const PlotArgs& a) {
  load(a.common);
  std::vector<Panel> panels;
  auto panel_for = [&](const std::string& title, const std::string& x_label) -> Panel& {
    for (Panel& p : panels) {
      if (p.title == title) return p;
    }
    panels.push_back({title, x_label, {}});
    return panels.back();
  };
  for (const std::string& path : a.inputs) {
    const CsvTable t = read_csv(path);
    const std::string label = fs::path(path).stem().string();
    std::vector<std::size_t> rows;
    if (t.column("success_rate") >= 0 && t.column("step") >= 0) {
      for (std::size_t r = 0; r < t.rows.size(); ++r) rows.push_back(r);
      const auto x = numeric_column(t, t.column("step"), rows);
      for (const char* metric : {"mean_return", "success_rate", "entropy", "lr"}) {
        panel_for(metric, "environment steps")
            .series.push_back({label, x, numeric_column(t, t.column(metric), rows)});
      }
    } else if (t.column("error_c") >= 0 && t.column("trial") >= 0) {
      const int trial = t.column("trial");
      for (std::size_t r = 0; r < t.rows.size(); ++r) {
        if (t.rows[r][static_cast<std::size_t>(trial)] != "summary") rows.push_back(r);
      }
      const int ctrl = t.column("controller");
      const std::string name = ctrl >= 0 && !rows.empty() ? t.rows[rows[0]][static_cast<std::size_t>(ctrl)] : label;
      const auto x = numeric_column(t, trial, rows);
      for (const char* metric : {"error_c", "error_s", "error_t_mean", "error_e_mean"}) {
        panel_for(metric, "trial").series.push_back({name, x, numeric_column(t, t.column(metric), rows)});
      }
    } else if (t.column("error_deg") >= 0) {
      for (std::size_t r = 0; r < t.rows.size(); ++r) rows.push_back(r);
      const auto x = numeric_column(t, t.column("step"), rows);
      panel_for("error_deg", "step").series.push_back({label, x, numeric_column(t, t.column("error_deg"), rows)});
      panel_for("activation_norm", "step")
          .series.push_back({label, x, numeric_column(t, t.column("activation_norm"), rows)});
    } else {
      throw UsageError(path + ": not a training log, eval report or fdat-track trajectory");
    }
  }
  const std::string out = a.common.out.empty() ? "plot.svg" : a.common.out;
  write_text(out, render_svg(panels));
  std::cout << json{{"plot", out}, {"panels", panels.size()}}.dump() << '\n';
  return 0;
}

}  // namespace
}  // namespace myotrack::tools

int main(int argc, char** argv) {
  using namespace myotrack::tools;
  CLI::App app{"Muscle-driven target tracking: FDAT and PPO controllers on an actuated chain"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train a PPO policy");
  add_common(train, train_args.common, "Output directory (checkpoints, log, config)");
  train->add_option("--steps", train_args.steps, "Total environment steps");
  train->add_option("--envs", train_args.envs, "Parallel environments");
  train->add_option("--remote", train_args.remote, "Train against an env service at HOST:PORT");
  train->add_option("--resume", train_args.resume, "Checkpoint to resume from")->check(CLI::ExistingFile);

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Evaluate a controller over seeded trials");
  add_common(eval, eval_args.common, "Report CSV path");
  eval->add_option("--controller", eval_args.controller, "fdat or policy")
      ->check(CLI::IsMember({"fdat", "policy"}));
  eval->add_option("--checkpoint", eval_args.checkpoint, "Policy checkpoint")->check(CLI::ExistingFile);
  eval->add_option("--trials", eval_args.trials, "Number of trials");
  eval->add_option("--samples", eval_args.samples, "Steps per trial");

  TrackArgs track_args;
  auto* track = app.add_subcommand("fdat-track", "Track one seeded target with FDAT");
  add_common(track, track_args.common, "Trajectory CSV path");
  track->add_option("--steps", track_args.steps, "Simulation steps");

  ServeArgs serve_args;
  auto* serve = app.add_subcommand("serve", "Run the REST environment service");
  add_common(serve, serve_args.common, "Write {host, port} JSON here once listening");
  serve->add_option("--bind", serve_args.bind, "Bind address");
  serve->add_option("--port", serve_args.port, "Port (0 picks one; MYOTRACK_PORT overrides)");
  serve->add_option("--model-config", serve_args.model_config, "Config file for the model section")
      ->check(CLI::ExistingFile);
  serve->add_option("--env-config", serve_args.env_config, "Config file for the env section")
      ->check(CLI::ExistingFile);
  serve->add_option("--max-sessions", serve_args.max_sessions, "Concurrent session limit");
  serve->add_option("--idle-timeout", serve_args.idle_timeout, "Seconds before idle sessions are dropped");

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "Time FDAT solves against policy inference");
  add_common(bench, bench_args.common, "Also write the JSON summary here");
  bench->add_option("--steps", bench_args.steps, "Timed steps");
  bench->add_option("--checkpoint", bench_args.checkpoint, "Policy checkpoint (default: fresh network)")
      ->check(CLI::ExistingFile);

  PlotArgs plot_args;
  auto* plot = app.add_subcommand("plot", "Render CSV outputs as an SVG chart");
  add_common(plot, plot_args.common, "SVG path");
  plot->add_option("--input,-i", plot_args.inputs, "Training log, eval report or fdat-track CSV")
      ->required()
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);
  spdlog::set_default_logger(spdlog::stderr_color_mt("myotrack"));
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (*train) return run_train(train_args);
    if (*eval) return run_eval_cmd(eval_args);
    if (*track) return run_fdat_track(track_args);
    if (*serve) return run_serve(serve_args);
    if (*bench) return run_bench(bench_args);
    if (*plot) return run_plot(plot_args);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n" << app.help();
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kUsageError;
}
