#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "aoi/rng.hpp"
#include "aoi/traces.hpp"

namespace aoi {

struct SensorConfig {
  double packet_bytes = 0.0;  // L_n
  double threshold_ms = 0.0;  // tau_n
  double penalty = 0.0;       // lambda_n
};

struct EnvConfig {
  std::vector<SensorConfig> sensors;
  double success_prob = 0.9;
  int history_len = 5;
  int max_attempts = 64;

  std::size_t num_sensors() const { return sensors.size(); }
  std::vector<double> thresholds() const;
  std::vector<double> penalties() const;

  /// Throws ConfigError on the first violated invariant.
  void validate() const;
};

/// Ten sensors with L_n = 50(n+1) B, tau_n = 30 + 20n ms and
/// lambda_n = 1000 (N - n) / N, p = 0.9, history of 5 jobs.
EnvConfig paper_env_config(int num_sensors = 10);

/// The agent-visible part of the environment state.
struct Observation {
  std::vector<double> ages;               // ms, one per sensor
  std::vector<double> recent_throughput;  // bytes/ms, oldest first
  double last_service_ms = 0.0;

  bool operator==(const Observation&) const = default;
};

struct ServiceOutcome {
  int attempts = 0;
  std::vector<double> attempt_rates;  // rate at each attempt's start
  double duration_ms = 0.0;
  bool truncated = false;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  int action = 0;
  ServiceOutcome service;
  std::vector<std::uint8_t> violations;  // post-step a_n > tau_n
};

/// Simulates one packet delivery of `packet_bytes` starting at `start_ms`.
/// Each attempt lasts packet_bytes / rate_at(attempt start); `delivered`
/// decides whether an attempt succeeds. Stops after `max_attempts`.
ServiceOutcome transmit(double packet_bytes, double start_ms, const Trace& trace,
                        int max_attempts, const std::function<bool()>& delivered);

/// Reward for post-step ages: -sum(a) - sum(lambda * [a > tau]).
double reward_for(const EnvConfig& config, const std::vector<double>& ages);

/// Single-threaded scheduling environment. Shares an immutable trace.
class Env {
 public:
  explicit Env(EnvConfig config);

  /// Ages and history to zero, clock to `start_offset_ms`, job index to 0.
  Observation reset(TracePtr trace, std::uint64_t seed, double start_offset_ms = 0.0);

  /// Serves `sensor` for one job. Throws std::out_of_range on a bad index.
  StepResult step(int sensor);

  Observation observe() const;

  const EnvConfig& config() const { return config_; }
  const std::vector<double>& ages() const { return ages_; }
  double clock_ms() const { return clock_ms_; }
  std::uint64_t job_index() const { return job_index_; }
  const Trace& trace() const { return *trace_; }

 private:
  EnvConfig config_;
  TracePtr trace_;
  std::vector<double> ages_;
  std::vector<double> throughput_;
  double last_service_ms_ = 0.0;
  double clock_ms_ = 0.0;
  std::uint64_t job_index_ = 0;
  Rng drop_rng_;
};

/// Writes `k,action,attempts,duration_ms,reward,age_0..age_{N-1}` rows.
class StepLogWriter {
 public:
  StepLogWriter(std::ostream& out, std::size_t num_sensors);
  void write(std::uint64_t k, const StepResult& r);

 private:
  std::ostream& out_;
};

}  // namespace aoi
