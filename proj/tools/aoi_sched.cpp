// Command-line entry point: gen-traces, train, eval, compare.
//
// Exit codes: 0 success, 2 configuration or input error, 3 runtime or
// divergence error.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "aoi/checkpoint.hpp"
#include "aoi/config.hpp"
#include "aoi/error.hpp"
#include "aoi/eval.hpp"
#include "aoi/rng.hpp"
#include "aoi/train.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

enum class LogLevel { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

LogLevel log_level() {
  const char* v = std::getenv("AOI_SCHED_LOG");
  if (!v) return LogLevel::kInfo;
  const std::string s(v);
  if (s == "error" || s == "quiet") return LogLevel::kError;
  if (s == "warn") return LogLevel::kWarn;
  if (s == "debug") return LogLevel::kDebug;
  return LogLevel::kInfo;
}

void log(LogLevel level, const std::string& msg) {
  static const LogLevel threshold = log_level();
  if (level <= threshold) std::cerr << msg << '\n';
}

struct CommonArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string traces;
  std::string out;
};

aoi::RunConfig load_config(const CommonArgs& args) {
  aoi::RunConfig cfg =
      args.config.empty() ? aoi::paper_iv_defaults() : aoi::load_run_config(args.config);
  if (args.seed) {
    cfg.seed = *args.seed;
    cfg.train.seed = *args.seed;
    cfg.eval.seed = aoi::derive_seed(*args.seed, "eval");
  }
  return cfg;
}

fs::path pick(const std::string& flag, const fs::path& from_config, const char* fallback) {
  if (!flag.empty()) return flag;
  if (!from_config.empty()) return from_config;
  return fallback;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

int cmd_gen_traces(const CommonArgs& args) {
  aoi::RunConfig cfg = load_config(args);
  auto gen = cfg.traces;
  if (args.seed) {
    gen.train_seed = aoi::derive_seed(*args.seed, "train-traces");
    gen.test_seed = aoi::derive_seed(*args.seed, "test-traces");
  }
  const fs::path out = pick(args.out, {}, "traces");
  const auto train = aoi::generate_trace_set(gen, gen.train_count, gen.train_seed, "train");
  const auto test = aoi::generate_trace_set(gen, gen.test_count, gen.test_seed, "test");
  fs::create_directories(out / "train");
  fs::create_directories(out / "test");
  for (const auto& t : train) aoi::save_trace(*t, out / "train" / (t->id() + ".csv"));
  for (const auto& t : test) aoi::save_trace(*t, out / "test" / (t->id() + ".csv"));
  log(LogLevel::kInfo, "wrote " + std::to_string(train.size()) + " train and " +
                           std::to_string(test.size()) + " test traces under " + out.string());
  return 0;
}

int cmd_train(const CommonArgs& args, std::optional<int> workers) {
  aoi::RunConfig cfg = load_config(args);
  if (workers) cfg.train.workers = *workers;
  cfg.validate();
  const fs::path trace_dir = pick(args.traces, cfg.train_trace_dir, "traces/train");
  const aoi::TraceSet traces = aoi::load_trace_dir(trace_dir);
  const fs::path out = pick(args.out, cfg.out_dir, "runs/train");

  aoi::TrainOptions opts;
  opts.out_dir = out;
  opts.config_hash = cfg.config_hash();
  int total = 0;
  for (const auto& s : cfg.train.entropy_schedule) total += s.episodes;
  int done = 0;
  opts.on_episode = [&](const aoi::LearningCurveRow& r) {
    ++done;
    if (done % 50 == 0 || done == total) {
      std::ostringstream ss;
      ss << "stage " << r.stage << " beta " << r.beta << " episode " << r.episode << " ("
         << done << "/" << total << ") mean_reward " << r.mean_reward << " mean_aoi "
         << r.mean_aoi << " violations " << r.violations_total;
      log(LogLevel::kInfo, ss.str());
    }
  };
  log(LogLevel::kInfo, "training on " + std::to_string(traces.size()) + " traces from " +
                           trace_dir.string() + ", config hash " + opts.config_hash);
  const auto result = aoi::train(cfg.env, traces, cfg.train, opts);
  log(LogLevel::kInfo, "wrote " + std::to_string(result.stage_checkpoints.size()) +
                           " checkpoints to " + out.string());
  return 0;
}

struct EvalArgs {
  std::string scheduler = "edf";
  std::string mode;
  std::string policy;
  std::string name;
  std::optional<std::size_t> jobs;
};

int cmd_eval(const CommonArgs& args, const EvalArgs& ea) {
  aoi::RunConfig cfg = load_config(args);
  if (ea.jobs) cfg.eval.jobs = *ea.jobs;
  cfg.validate();
  const aoi::SelectMode mode = ea.mode.empty() ? cfg.eval_mode : aoi::parse_select_mode(ea.mode);

  std::unique_ptr<aoi::Scheduler> scheduler;
  if (ea.scheduler == "edf") {
    scheduler = std::make_unique<aoi::EdfScheduler>(cfg.env.thresholds());
  } else if (ea.scheduler == "osrp") {
    scheduler = std::make_unique<aoi::OsrpScheduler>(cfg.env.thresholds());
  } else if (ea.scheduler == "rl") {
    if (ea.policy.empty()) throw aoi::ConfigError("--scheduler rl needs --policy <checkpoint>");
    const aoi::Checkpoint ckpt = aoi::load_checkpoint(ea.policy);
    const std::string expected = cfg.config_hash();
    if (ckpt.meta.config_hash != expected ||
        !(ckpt.actor.shape() == aoi::actor_shape(cfg.env, cfg.train.net)))
      throw aoi::ConfigError("checkpoint " + ea.policy + " has config hash " +
                             ckpt.meta.config_hash + " (N=" +
                             std::to_string(ckpt.meta.num_sensors) +
                             ") but the configuration hash is " + expected + " (N=" +
                             std::to_string(cfg.env.num_sensors()) + ")");
    scheduler = std::make_unique<aoi::PolicyScheduler>(ckpt.actor, ckpt.meta.scale, mode);
  } else {
    throw aoi::ConfigError("unknown scheduler '" + ea.scheduler + "' (expected edf|osrp|rl)");
  }

  const fs::path trace_dir = pick(args.traces, cfg.test_trace_dir, "traces/test");
  const aoi::TraceSet traces = aoi::load_trace_dir(trace_dir);
  const fs::path out = pick(args.out, cfg.out_dir, "runs/eval");

  aoi::Metrics m = aoi::evaluate(*scheduler, cfg.env, traces, cfg.eval);
  if (!ea.name.empty()) m.scheduler = ea.name;
  fs::create_directories(out);
  const std::vector<aoi::Metrics> one{m};
  std::ostringstream metrics, summary, cdf;
  aoi::write_metrics_csv(one, metrics);
  aoi::write_summary_csv(aoi::compare(one, m.scheduler), summary);
  aoi::write_cdf_csv(m, cdf);
  write_file(out / (m.scheduler + "_metrics.csv"), metrics.str());
  write_file(out / (m.scheduler + "_summary.csv"), summary.str());
  write_file(out / (m.scheduler + "_cdf.csv"), cdf.str());

  std::ostringstream msg;
  msg << m.scheduler << ": objective " << m.objective << " (aoi " << m.aoi_term << " + penalty "
      << m.penalty_term << ") over " << m.jobs << " jobs";
  log(LogLevel::kInfo, msg.str());
  return 0;
}

/// Splits each scheduler's CDF file into per-sensor files.
void write_per_sensor_cdfs(const std::vector<fs::path>& inputs,
                           const std::vector<std::vector<aoi::Metrics>>& per_input,
                           const fs::path& out) {
  std::map<std::string, std::ostringstream> by_sensor;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (const auto& m : per_input[i]) {
      const fs::path cdf_path = inputs[i].parent_path() / (m.scheduler + "_cdf.csv");
      std::ifstream in(cdf_path);
      if (!in) continue;
      std::string line;
      std::getline(in, line);  // header
      while (std::getline(in, line)) {
        const auto comma = line.find(',');
        if (comma == std::string::npos) continue;
        auto& os = by_sensor[line.substr(0, comma)];
        os << m.scheduler << ',' << line.substr(comma + 1) << '\n';
      }
    }
  }
  for (auto& [sensor, text] : by_sensor)
    write_file(out / ("cdf_sensor" + sensor + ".csv"), "scheduler,aoi_ms,cdf\n" + text.str());
}

int cmd_compare(const CommonArgs& args, const std::vector<std::string>& inputs,
                const std::string& reference) {
  aoi::RunConfig cfg = load_config(args);
  const auto penalties = cfg.env.penalties();
  std::vector<aoi::Metrics> all;
  std::vector<std::vector<aoi::Metrics>> per_input;
  std::vector<fs::path> paths;
  for (const auto& p : inputs) {
    std::ifstream in(p);
    if (!in) throw aoi::ConfigError("cannot read metrics file " + p);
    per_input.push_back(aoi::read_metrics_csv(in, penalties));
    paths.emplace_back(p);
    all.insert(all.end(), per_input.back().begin(), per_input.back().end());
  }
  const aoi::Comparison cmp = aoi::compare(all, reference);
  const fs::path out = pick(args.out, cfg.out_dir, "runs/compare");
  fs::create_directories(out);
  std::ostringstream summary, table;
  aoi::write_summary_csv(cmp, summary);
  aoi::write_table_csv(cmp, table);
  write_file(out / "summary.csv", summary.str());
  write_file(out / "table.csv", table.str());
  write_per_sensor_cdfs(paths, per_input, out);
  std::cout << table.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Age-of-information scheduling: traces, actor-critic training, evaluation"};
  app.require_subcommand(1);

  CommonArgs common;
  std::optional<int> workers;
  EvalArgs eval_args;
  std::vector<std::string> inputs;
  std::string reference = "rl";

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "JSON run configuration");
    sub->add_option("--seed", common.seed, "Top-level seed");
    sub->add_option("--out", common.out, "Output directory");
  };

  auto* gen = app.add_subcommand("gen-traces", "Generate synthetic train/test trace sets");
  add_common(gen);

  auto* train = app.add_subcommand("train", "Train the actor-critic scheduler");
  add_common(train);
  train->add_option("--traces", common.traces, "Directory of training trace CSVs");
  train->add_option("--workers", workers, "Parallel rollout workers");

  auto* eval = app.add_subcommand("eval", "Evaluate a scheduler");
  add_common(eval);
  eval->add_option("--traces", common.traces, "Directory of evaluation trace CSVs");
  eval->add_option("--scheduler", eval_args.scheduler, "edf | osrp | rl")
      ->check(CLI::IsMember({"edf", "osrp", "rl"}));
  eval->add_option("--mode", eval_args.mode, "sample | greedy (rl only)")
      ->check(CLI::IsMember({"sample", "greedy"}));
  eval->add_option("--policy", eval_args.policy, "Checkpoint for --scheduler rl");
  eval->add_option("--name", eval_args.name, "Label used in output files");
  eval->add_option("--jobs", eval_args.jobs, "Override the number of evaluated jobs");

  auto* cmp = app.add_subcommand("compare", "Build the comparison table from metrics files");
  add_common(cmp);
  cmp->add_option("--inputs", inputs, "Metrics CSV files")->required();
  cmp->add_option("--reference", reference, "Scheduler used for normalization");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen) return cmd_gen_traces(common);
    if (*train) return cmd_train(common, workers);
    if (*eval) return cmd_eval(common, eval_args);
    if (*cmp) return cmd_compare(common, inputs, reference);
  } catch (const aoi::ConfigError& e) {
    log(LogLevel::kError, std::string("error: ") + e.what());
    return kExitConfig;
  } catch (const aoi::ParseError& e) {
    log(LogLevel::kError, std::string("error: ") + e.what());
    return kExitConfig;
  } catch (const aoi::ShapeError& e) {
    log(LogLevel::kError, std::string("error: ") + e.what());
    return kExitConfig;
  } catch (const aoi::NumericError& e) {
    log(LogLevel::kError, std::string("diverged: ") + e.what());
    return kExitRuntime;
  } catch (const std::exception& e) {
    log(LogLevel::kError, std::string("error: ") + e.what());
    return kExitRuntime;
  }
  return 0;
}
