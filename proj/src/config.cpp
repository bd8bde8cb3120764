#include "aoi/config.hpp"

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <nlohmann/json.hpp>
#include <sstream>

#include "aoi/error.hpp"
#include "aoi/rng.hpp"

namespace aoi {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::string& where,
                    std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& obj, const char* key, T& dst, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    dst = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

void read_sensors(const json& j, RunConfig& cfg) {
  if (j.is_array()) {
    cfg.env.sensors.clear();
    for (const auto& s : j) {
      reject_unknown(s, "sensors[]", {"packet_bytes", "threshold_ms", "penalty"});
      SensorConfig sc;
      if (!s.contains("packet_bytes") || !s.contains("threshold_ms") || !s.contains("penalty"))
        throw ConfigError("each sensor needs packet_bytes, threshold_ms and penalty");
      read(s, "packet_bytes", sc.packet_bytes, "sensors[]");
      read(s, "threshold_ms", sc.threshold_ms, "sensors[]");
      read(s, "penalty", sc.penalty, "sensors[]");
      cfg.env.sensors.push_back(sc);
    }
    return;
  }
  reject_unknown(j, "sensors", {"rule", "count"});
  std::string rule = "paper-iv";
  int count = 10;
  read(j, "rule", rule, "sensors");
  read(j, "count", count, "sensors");
  if (rule != "paper-iv") throw ConfigError("unknown sensor rule '" + rule + "'");
  if (count < 1) throw ConfigError("sensors.count must be >= 1");
  const EnvConfig preset = paper_env_config(count);
  cfg.env.sensors = preset.sensors;
}

void read_train(const json& j, RunConfig& cfg) {
  reject_unknown(j, "train",
                 {"gamma", "actor_lr", "critic_lr", "entropy_weights", "episodes_per_stage",
                  "entropy_schedule", "episode_len", "rollout_len", "workers", "optimizer",
                  "reward_scale"});
  auto& t = cfg.train;
  read(j, "gamma", t.gamma, "train");
  read(j, "actor_lr", t.actor_lr, "train");
  read(j, "critic_lr", t.critic_lr, "train");
  read(j, "episode_len", t.episode_len, "train");
  read(j, "rollout_len", t.rollout_len, "train");
  read(j, "workers", t.workers, "train");
  read(j, "reward_scale", t.reward_scale, "train");
  if (j.contains("optimizer")) {
    std::string name;
    read(j, "optimizer", name, "train");
    t.optimizer = parse_optimizer_kind(name);
  }
  if (j.contains("entropy_schedule")) {
    if (j.contains("entropy_weights") || j.contains("episodes_per_stage"))
      throw ConfigError("give either train.entropy_schedule or entropy_weights/episodes_per_stage");
    t.entropy_schedule.clear();
    for (const auto& s : j.at("entropy_schedule")) {
      reject_unknown(s, "train.entropy_schedule[]", {"weight", "episodes"});
      EntropyStage st;
      read(s, "weight", st.weight, "train.entropy_schedule[]");
      read(s, "episodes", st.episodes, "train.entropy_schedule[]");
      t.entropy_schedule.push_back(st);
    }
  } else if (j.contains("entropy_weights") || j.contains("episodes_per_stage")) {
    std::vector<double> weights;
    for (const auto& s : t.entropy_schedule) weights.push_back(s.weight);
    int episodes = t.entropy_schedule.empty() ? 100 : t.entropy_schedule.front().episodes;
    read(j, "entropy_weights", weights, "train");
    read(j, "episodes_per_stage", episodes, "train");
    t.entropy_schedule.clear();
    for (double w : weights) t.entropy_schedule.push_back({w, episodes});
  }
}

void read_traces(const json& j, TraceGenConfig& g) {
  reject_unknown(j, "traces",
                 {"kind", "rate", "low", "high", "p_switch", "mean", "sigma", "reversion",
                  "min_rate", "max_rate", "train_count", "test_count", "duration_ms", "step_ms",
                  "train_seed", "test_seed"});
  if (j.contains("kind")) {
    std::string kind;
    read(j, "kind", kind, "traces");
    g.kind = parse_synthetic_kind(kind);
  }
  auto& p = g.params;
  read(j, "rate", p.rate, "traces");
  read(j, "low", p.low, "traces");
  read(j, "high", p.high, "traces");
  read(j, "p_switch", p.p_switch, "traces");
  read(j, "mean", p.mean, "traces");
  read(j, "sigma", p.sigma, "traces");
  read(j, "reversion", p.reversion, "traces");
  read(j, "min_rate", p.min_rate, "traces");
  read(j, "max_rate", p.max_rate, "traces");
  read(j, "train_count", g.train_count, "traces");
  read(j, "test_count", g.test_count, "traces");
  read(j, "duration_ms", g.duration_ms, "traces");
  read(j, "step_ms", g.step_ms, "traces");
  read(j, "train_seed", g.train_seed, "traces");
  read(j, "test_seed", g.test_seed, "traces");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

}  // namespace

void RunConfig::validate() const {
  env.validate();
  train.validate();
  actor_shape(env, train.net);  // throws ShapeError when j < kernel
  if (eval.jobs < 1) throw ConfigError("eval.jobs must be >= 1");
  const auto& p = traces.params;
  if (traces.train_count < 1 || traces.test_count < 1)
    throw ConfigError("traces.train_count and traces.test_count must be >= 1");
  if (!(traces.duration_ms > 0.0) || !(traces.step_ms > 0.0))
    throw ConfigError("traces.duration_ms and traces.step_ms must be > 0");
  // Generating one trace exercises the kind-specific parameter checks.
  gen_synthetic(traces.kind, p, traces.step_ms, traces.step_ms, 0);
}

std::string RunConfig::config_hash() const {
  std::ostringstream ss;
  ss.precision(17);
  ss << "N=" << env.num_sensors();
  for (const auto& s : env.sensors)
    ss << ";" << s.packet_bytes << "," << s.threshold_ms << "," << s.penalty;
  ss << ";p=" << env.success_prob << ";j=" << env.history_len << ";max=" << env.max_attempts
     << ";f=" << train.net.filters << ";k=" << train.net.kernel << ";h=" << train.net.hidden;
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(ss.str())));
  return buf;
}

RunConfig paper_iv_defaults() {
  RunConfig c;
  c.seed = 1;
  c.env = paper_env_config(10);
  c.train.gamma = 0.9;
  c.train.actor_lr = 1e-3;
  c.train.critic_lr = 1e-3;
  c.train.reward_scale = 3e-3;
  c.train.entropy_schedule = default_entropy_schedule(500);
  c.eval.jobs = 50000;
  c.eval.burn_in = 100;
  c.eval_mode = SelectMode::kGreedy;
  c.traces.kind = SyntheticKind::kLognormalWalk;
  c.traces.params.mean = 55.0;
  c.traces.params.sigma = 0.15;
  c.traces.params.reversion = 0.05;
  c.traces.params.min_rate = 55.0 / 8;
  c.traces.params.max_rate = 55.0 * 8;
  return c;
}

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(j, "config",
                 {"defaults", "seed", "sensors", "env", "network", "train", "eval", "traces",
                  "paths"});
  RunConfig cfg;
  if (j.contains("defaults")) {
    std::string preset;
    read(j, "defaults", preset, "config");
    if (preset != "paper-iv") throw ConfigError("unknown defaults preset '" + preset + "'");
    cfg = paper_iv_defaults();
  }
  read(j, "seed", cfg.seed, "config");
  if (j.contains("sensors")) read_sensors(j.at("sensors"), cfg);
  if (j.contains("env")) {
    const json& e = j.at("env");
    reject_unknown(e, "env", {"success_prob", "history_len", "max_attempts"});
    read(e, "success_prob", cfg.env.success_prob, "env");
    read(e, "history_len", cfg.env.history_len, "env");
    read(e, "max_attempts", cfg.env.max_attempts, "env");
  }
  if (j.contains("network")) {
    const json& n = j.at("network");
    reject_unknown(n, "network", {"filters", "kernel", "hidden", "age_scale_ms"});
    read(n, "filters", cfg.train.net.filters, "network");
    read(n, "kernel", cfg.train.net.kernel, "network");
    read(n, "hidden", cfg.train.net.hidden, "network");
    read(n, "age_scale_ms", cfg.train.age_scale_ms, "network");
  }
  if (j.contains("train")) read_train(j.at("train"), cfg);
  if (j.contains("eval")) {
    const json& e = j.at("eval");
    reject_unknown(e, "eval", {"jobs", "burn_in", "mode"});
    read(e, "jobs", cfg.eval.jobs, "eval");
    read(e, "burn_in", cfg.eval.burn_in, "eval");
    if (e.contains("mode")) {
      std::string mode;
      read(e, "mode", mode, "eval");
      cfg.eval_mode = parse_select_mode(mode);
    }
  }
  if (j.contains("traces")) read_traces(j.at("traces"), cfg.traces);
  if (j.contains("paths")) {
    const json& p = j.at("paths");
    reject_unknown(p, "paths", {"traces", "test_traces", "out"});
    std::string s;
    if (p.contains("traces")) {
      read(p, "traces", s, "paths");
      cfg.train_trace_dir = resolve(base_dir, s);
    }
    if (p.contains("test_traces")) {
      read(p, "test_traces", s, "paths");
      cfg.test_trace_dir = resolve(base_dir, s);
    }
    if (p.contains("out")) {
      read(p, "out", s, "paths");
      cfg.out_dir = resolve(base_dir, s);
    }
  }
  cfg.train.seed = cfg.seed;
  cfg.eval.seed = derive_seed(cfg.seed, "eval");
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.parent_path());
}

TraceSet generate_trace_set(const TraceGenConfig& cfg, int count, std::uint64_t seed,
                            const std::string& prefix) {
  TraceSet out;
  for (int i = 0; i < count; ++i) {
    out.push_back(std::make_shared<const Trace>(
        gen_synthetic(cfg.kind, cfg.params, cfg.duration_ms, cfg.step_ms,
                      derive_seed(seed, "trace-set", static_cast<std::uint64_t>(i)),
                      prefix + "_" + std::to_string(i))));
  }
  return out;
}

}  // namespace aoi
