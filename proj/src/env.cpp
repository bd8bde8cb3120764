#include "aoi/env.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>
#include <string>

#include "aoi/error.hpp"

namespace aoi {

std::vector<double> EnvConfig::thresholds() const {
  std::vector<double> out;
  out.reserve(sensors.size());
  for (const auto& s : sensors) out.push_back(s.threshold_ms);
  return out;
}

std::vector<double> EnvConfig::penalties() const {
  std::vector<double> out;
  out.reserve(sensors.size());
  for (const auto& s : sensors) out.push_back(s.penalty);
  return out;
}

void EnvConfig::validate() const {
  if (sensors.empty()) throw ConfigError("at least one sensor is required");
  for (std::size_t n = 0; n < sensors.size(); ++n) {
    const auto& s = sensors[n];
    const std::string tag = "sensor " + std::to_string(n);
    if (!(s.packet_bytes > 0.0) || !std::isfinite(s.packet_bytes))
      throw ConfigError(tag + ": packet_bytes must be > 0");
    if (!(s.threshold_ms > 0.0) || !std::isfinite(s.threshold_ms))
      throw ConfigError(tag + ": threshold_ms must be > 0");
    if (!(s.penalty >= 0.0) || !std::isfinite(s.penalty))
      throw ConfigError(tag + ": penalty must be >= 0");
  }
  if (!(success_prob > 0.0 && success_prob <= 1.0))
    throw ConfigError("success_prob must be in (0, 1]");
  if (history_len < 1) throw ConfigError("history_len must be >= 1");
  if (max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
}

EnvConfig paper_env_config(int num_sensors) {
  EnvConfig c;
  const double n_total = num_sensors;
  for (int n = 0; n < num_sensors; ++n) {
    c.sensors.push_back({50.0 * (n + 1), 30.0 + 20.0 * n, 1000.0 * (n_total - n) / n_total});
  }
  c.success_prob = 0.9;
  c.history_len = 5;
  c.max_attempts = 64;
  return c;
}

ServiceOutcome transmit(double packet_bytes, double start_ms, const Trace& trace,
                        int max_attempts, const std::function<bool()>& delivered) {
  ServiceOutcome out;
  double clock = start_ms;
  while (true) {
    const double rate = trace.rate_at(clock);
    const double dt = packet_bytes / rate;
    out.attempt_rates.push_back(rate);
    out.duration_ms += dt;
    clock += dt;
    ++out.attempts;
    if (delivered()) break;
    if (out.attempts >= max_attempts) {
      out.truncated = true;
      break;
    }
  }
  return out;
}

double reward_for(const EnvConfig& config, const std::vector<double>& ages) {
  double age_sum = 0.0;
  double penalty = 0.0;
  for (std::size_t n = 0; n < ages.size(); ++n) {
    age_sum += ages[n];
    if (ages[n] > config.sensors[n].threshold_ms) penalty += config.sensors[n].penalty;
  }
  return -age_sum - penalty;
}

Env::Env(EnvConfig config) : config_(std::move(config)) { config_.validate(); }

Observation Env::reset(TracePtr trace, std::uint64_t seed, double start_offset_ms) {
  if (!trace) throw ConfigError("reset needs a trace");
  if (!(start_offset_ms >= 0.0)) throw ConfigError("start offset must be >= 0");
  trace_ = std::move(trace);
  ages_.assign(config_.num_sensors(), 0.0);
  throughput_.assign(static_cast<std::size_t>(config_.history_len), 0.0);
  last_service_ms_ = 0.0;
  clock_ms_ = start_offset_ms;
  job_index_ = 0;
  drop_rng_ = Rng(derive_seed(seed, "drops"));
  return observe();
}

StepResult Env::step(int sensor) {
  if (!trace_) throw std::logic_error("step called before reset");
  if (sensor < 0 || static_cast<std::size_t>(sensor) >= config_.num_sensors())
    throw std::out_of_range("action " + std::to_string(sensor) + " outside [0, " +
                            std::to_string(config_.num_sensors()) + ")");
  const auto& s = config_.sensors[static_cast<std::size_t>(sensor)];
  const double p = config_.success_prob;
  StepResult r;
  r.action = sensor;
  r.service = transmit(s.packet_bytes, clock_ms_, *trace_, config_.max_attempts,
                       [&] { return p >= 1.0 || drop_rng_.bernoulli(p); });
  const double d = r.service.duration_ms;

  for (std::size_t n = 0; n < ages_.size(); ++n) ages_[n] += d;
  ages_[static_cast<std::size_t>(sensor)] = d;

  std::rotate(throughput_.begin(), throughput_.begin() + 1, throughput_.end());
  throughput_.back() = s.packet_bytes * r.service.attempts / d;
  last_service_ms_ = d;
  clock_ms_ += d;
  ++job_index_;

  r.violations.resize(ages_.size());
  for (std::size_t n = 0; n < ages_.size(); ++n)
    r.violations[n] = ages_[n] > config_.sensors[n].threshold_ms ? 1 : 0;
  r.reward = reward_for(config_, ages_);
  r.observation = observe();
  return r;
}

Observation Env::observe() const { return {ages_, throughput_, last_service_ms_}; }

StepLogWriter::StepLogWriter(std::ostream& out, std::size_t num_sensors) : out_(out) {
  out_ << "k,action,attempts,duration_ms,reward";
  for (std::size_t n = 0; n < num_sensors; ++n) out_ << ",age_" << n;
  out_ << '\n' << std::setprecision(17);
}

void StepLogWriter::write(std::uint64_t k, const StepResult& r) {
  out_ << k << ',' << r.action << ',' << r.service.attempts << ',' << r.service.duration_ms
       << ',' << r.reward;
  for (double a : r.observation.ages) out_ << ',' << a;
  out_ << '\n';
}

}  // namespace aoi
