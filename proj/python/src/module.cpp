#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "aoi/config.hpp"
#include "aoi/error.hpp"
#include "aoi/eval.hpp"
#include "aoi/train.hpp"

namespace py = pybind11;
using namespace aoi;

namespace {

py::dict step_to_dict(const StepResult& r) {
  py::dict d;
  d["ages"] = r.observation.ages;
  d["recent_throughput"] = r.observation.recent_throughput;
  d["last_service_ms"] = r.observation.last_service_ms;
  d["reward"] = r.reward;
  d["action"] = r.action;
  d["attempts"] = r.service.attempts;
  d["duration_ms"] = r.service.duration_ms;
  d["truncated"] = r.service.truncated;
  std::vector<bool> v(r.violations.begin(), r.violations.end());
  d["violations"] = v;
  return d;
}

std::unique_ptr<Scheduler> make_scheduler(const std::string& name, const RunConfig& cfg,
                                          const Checkpoint* policy, const std::string& mode) {
  if (name == "edf") return std::make_unique<EdfScheduler>(cfg.env.thresholds());
  if (name == "osrp") return std::make_unique<OsrpScheduler>(cfg.env.thresholds());
  if (name == "rl") {
    if (!policy) throw ConfigError("scheduler 'rl' needs a checkpoint");
    if (!(policy->actor.shape() == actor_shape(cfg.env, cfg.train.net)))
      throw ShapeError("checkpoint does not match the configuration");
    const SelectMode m = mode.empty() ? cfg.eval_mode : parse_select_mode(mode);
    return std::make_unique<PolicyScheduler>(policy->actor, policy->meta.scale, m);
  }
  throw ConfigError("unknown scheduler '" + name + "' (expected edf|osrp|rl)");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Age-of-information sensor scheduling: simulator, baselines and actor-critic training";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  py::class_<Trace, std::shared_ptr<Trace>>(m, "Trace")
      .def(py::init([](std::string id, const std::vector<std::pair<double, double>>& samples,
                       double duration_ms) {
             std::vector<TraceSample> s;
             for (auto [t, r] : samples) s.push_back({t, r});
             return std::make_shared<Trace>(std::move(id), std::move(s), duration_ms);
           }),
           py::arg("id"), py::arg("samples"), py::arg("duration_ms"))
      .def("rate_at", &Trace::rate_at, py::arg("t_ms"))
      .def("mean_rate", &Trace::mean_rate)
      .def_property_readonly("id", &Trace::id)
      .def_property_readonly("duration_ms", &Trace::duration_ms)
      .def_property_readonly("samples", [](const Trace& t) {
        std::vector<std::pair<double, double>> out;
        for (const auto& s : t.samples()) out.emplace_back(s.time_ms, s.rate);
        return out;
      });

  m.def("load_trace", [](const std::filesystem::path& p) { return std::make_shared<Trace>(load_trace(p)); });
  m.def("save_trace", [](const Trace& t, const std::filesystem::path& p) { save_trace(t, p); });
  m.def(
      "gen_synthetic",
      [](const std::string& kind, double duration_ms, double step_ms, std::uint64_t seed,
         const py::kwargs& kw) {
        SyntheticParams p;
        for (auto [k, v] : kw) {
          const auto key = k.cast<std::string>();
          const auto val = v.cast<double>();
          if (key == "rate") p.rate = val;
          else if (key == "low") p.low = val;
          else if (key == "high") p.high = val;
          else if (key == "p_switch") p.p_switch = val;
          else if (key == "mean") p.mean = val;
          else if (key == "sigma") p.sigma = val;
          else if (key == "reversion") p.reversion = val;
          else if (key == "min_rate") p.min_rate = val;
          else if (key == "max_rate") p.max_rate = val;
          else throw ConfigError("unknown trace parameter '" + key + "'");
        }
        return std::make_shared<Trace>(
            gen_synthetic(parse_synthetic_kind(kind), p, duration_ms, step_ms, seed));
      },
      py::arg("kind"), py::arg("duration_ms"), py::arg("step_ms"), py::arg("seed"));

  py::class_<SensorConfig>(m, "SensorConfig")
      .def(py::init<double, double, double>(), py::arg("packet_bytes"), py::arg("threshold_ms"),
           py::arg("penalty"))
      .def_readwrite("packet_bytes", &SensorConfig::packet_bytes)
      .def_readwrite("threshold_ms", &SensorConfig::threshold_ms)
      .def_readwrite("penalty", &SensorConfig::penalty);

  py::class_<EnvConfig>(m, "EnvConfig")
      .def(py::init<>())
      .def_readwrite("sensors", &EnvConfig::sensors)
      .def_readwrite("success_prob", &EnvConfig::success_prob)
      .def_readwrite("history_len", &EnvConfig::history_len)
      .def_readwrite("max_attempts", &EnvConfig::max_attempts)
      .def("thresholds", &EnvConfig::thresholds)
      .def("penalties", &EnvConfig::penalties)
      .def("validate", &EnvConfig::validate);
  m.def("paper_env_config", &paper_env_config, py::arg("num_sensors") = 10);

  py::class_<Env>(m, "Env")
      .def(py::init<EnvConfig>(), py::arg("config"))
      .def(
          "reset",
          [](Env& e, std::shared_ptr<Trace> t, std::uint64_t seed, double offset) {
            const Observation o = e.reset(std::move(t), seed, offset);
            return py::make_tuple(o.ages, o.recent_throughput, o.last_service_ms);
          },
          py::arg("trace"), py::arg("seed"), py::arg("offset_ms") = 0.0)
      .def("step", [](Env& e, int sensor) { return step_to_dict(e.step(sensor)); }, py::arg("sensor"))
      .def_property_readonly("ages", &Env::ages)
      .def_property_readonly("clock_ms", &Env::clock_ms)
      .def_property_readonly("job_index", &Env::job_index);

  m.def("edf_select", [](const std::vector<double>& a, const std::vector<double>& t) {
    return edf_select(a, t);
  });
  m.def("osrp_probs", [](const std::vector<double>& t) { return osrp_probs(t); });

  py::class_<RunConfig>(m, "RunConfig")
      .def_readwrite("seed", &RunConfig::seed)
      .def_readwrite("env", &RunConfig::env)
      .def("config_hash", &RunConfig::config_hash)
      .def("set_episodes_per_stage",
           [](RunConfig& c, int episodes) {
             for (auto& s : c.train.entropy_schedule) s.episodes = episodes;
           })
      .def_property(
          "episode_len", [](const RunConfig& c) { return c.train.episode_len; },
          [](RunConfig& c, int v) { c.train.episode_len = v; })
      .def_property(
          "eval_jobs", [](const RunConfig& c) { return c.eval.jobs; },
          [](RunConfig& c, std::size_t v) { c.eval.jobs = v; });
  m.def("paper_iv_defaults", &paper_iv_defaults);
  m.def("parse_run_config", [](const std::string& text) { return parse_run_config(text); },
        py::arg("json_text"));
  m.def("load_run_config", &load_run_config, py::arg("path"));
  m.def(
      "generate_traces",
      [](const RunConfig& cfg, const std::string& split) {
        const bool train = split == "train";
        if (!train && split != "test") throw ConfigError("split must be 'train' or 'test'");
        const auto& g = cfg.traces;
        TraceSet set = generate_trace_set(g, train ? g.train_count : g.test_count,
                                          train ? g.train_seed : g.test_seed, split);
        std::vector<std::shared_ptr<Trace>> out;
        for (auto& t : set) out.push_back(std::const_pointer_cast<Trace>(t));
        return out;
      },
      py::arg("config"), py::arg("split") = "train");

  py::class_<Checkpoint>(m, "Checkpoint")
      .def_property_readonly("num_sensors", [](const Checkpoint& c) { return c.meta.num_sensors; })
      .def_property_readonly("entropy_stage", [](const Checkpoint& c) { return c.meta.entropy_stage; })
      .def_property_readonly("config_hash", [](const Checkpoint& c) { return c.meta.config_hash; })
      .def("to_json", [](const Checkpoint& c) { return to_json(c); })
      .def("__eq__", [](const Checkpoint& a, const Checkpoint& b) { return a == b; });
  m.def("load_checkpoint", &load_checkpoint, py::arg("path"));
  m.def("save_checkpoint", &save_checkpoint, py::arg("checkpoint"), py::arg("path"));

  m.def(
      "train",
      [](const RunConfig& cfg, const std::vector<std::shared_ptr<Trace>>& traces,
         const std::filesystem::path& out_dir) {
        TraceSet set(traces.begin(), traces.end());
        TrainOptions opts;
        opts.out_dir = out_dir;
        opts.config_hash = cfg.config_hash();
        py::gil_scoped_release release;
        return train(cfg.env, set, cfg.train, opts).final_checkpoint;
      },
      py::arg("config"), py::arg("traces"), py::arg("out_dir") = std::filesystem::path{});

  m.def(
      "evaluate",
      [](const std::string& scheduler, const RunConfig& cfg,
         const std::vector<std::shared_ptr<Trace>>& traces, const Checkpoint* policy,
         const std::string& mode) {
        auto s = make_scheduler(scheduler, cfg, policy, mode);
        TraceSet set(traces.begin(), traces.end());
        EvalConfig ec = cfg.eval;
        ec.keep_samples = false;
        Metrics mt;
        {
          py::gil_scoped_release release;
          mt = evaluate(*s, cfg.env, set, ec);
        }
        py::dict d;
        d["scheduler"] = mt.scheduler;
        d["jobs"] = mt.jobs;
        d["avg_aoi"] = mt.avg_aoi;
        d["violation_freq"] = mt.violation_freq;
        d["aoi_term"] = mt.aoi_term;
        d["penalty_term"] = mt.penalty_term;
        d["objective"] = mt.objective;
        d["mean_neg_reward"] = mt.mean_neg_reward;
        return d;
      },
      py::arg("scheduler"), py::arg("config"), py::arg("traces"), py::arg("policy") = nullptr,
      py::arg("mode") = "");
}
