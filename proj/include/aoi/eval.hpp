#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aoi/env.hpp"
#include "aoi/schedulers.hpp"
#include "aoi/traces.hpp"

namespace aoi {

struct EvalConfig {
  std::size_t jobs = 50000;   // recorded jobs K
  std::size_t burn_in = 100;  // unrecorded jobs after each reset
  std::uint64_t seed = 1;
  bool keep_samples = true;   // per-sensor AoI samples for CDFs
};

struct Metrics {
  std::string scheduler;
  std::size_t jobs = 0;
  std::vector<double> avg_aoi;                  // ms, per sensor
  std::vector<double> violation_freq;           // per sensor, in [0, 1]
  std::vector<std::size_t> violation_count;     // per sensor
  std::vector<std::vector<double>> aoi_samples; // [sensor][job], post-step ages
  double aoi_term = 0.0;      // (1/(KN)) sum_n sum_k a_n(k)
  double penalty_term = 0.0;  // sum_n lambda_n * violation_freq_n
  double objective = 0.0;     // aoi_term + penalty_term
  double mean_neg_reward = 0.0;  // (1/K) sum_k -R_k over the same jobs
};

/// Runs K recorded jobs. Jobs are split into one segment per trace, visited
/// round-robin; each segment resets the environment at a seeded random offset
/// and discards its first `burn_in` jobs.
Metrics evaluate(Scheduler& scheduler, const EnvConfig& env_config, const TraceSet& traces,
                 const EvalConfig& config);

using CdfPoint = std::pair<double, double>;

/// Sorted unique values with cumulative fractions; the last fraction is 1.
std::vector<CdfPoint> cdf(std::span<const double> samples);

/// Fraction of samples <= x, read off a CDF.
double cdf_at(std::span<const CdfPoint> curve, double x);

struct Comparison {
  std::string reference;
  std::vector<std::string> names;
  std::vector<double> objectives;
  std::vector<double> normalized;
  std::vector<std::vector<double>> violation_freq;  // [scheduler][sensor]
  std::vector<std::vector<double>> avg_aoi;         // [scheduler][sensor]
};

/// Normalizes every objective by the reference's. Rejects a missing
/// reference, a zero reference objective, or mismatched sensor counts.
Comparison compare(std::span<const Metrics> metrics, const std::string& reference);

/// `scheduler,sensor,avg_aoi_ms,violation_freq`
void write_metrics_csv(std::span<const Metrics> metrics, std::ostream& out);
/// `scheduler,objective,normalized_objective`
void write_summary_csv(const Comparison& cmp, std::ostream& out);
/// `sensor,aoi_ms,cdf`
void write_cdf_csv(const Metrics& m, std::ostream& out);
/// Rows: normalized objective, violation percentage per sensor, average AoI
/// per sensor. One column per scheduler.
void write_table_csv(const Comparison& cmp, std::ostream& out);

/// Reads metrics CSV rows back; objectives are recomputed with `penalties`.
std::vector<Metrics> read_metrics_csv(std::istream& in, std::span<const double> penalties);

}  // namespace aoi
