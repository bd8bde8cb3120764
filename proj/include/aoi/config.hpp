#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "aoi/env.hpp"
#include "aoi/eval.hpp"
#include "aoi/schedulers.hpp"
#include "aoi/traces.hpp"
#include "aoi/train.hpp"

namespace aoi {

/// How `gen-traces` builds the train and held-out test sets.
struct TraceGenConfig {
  SyntheticKind kind = SyntheticKind::kLognormalWalk;
  SyntheticParams params;
  int train_count = 8;
  int test_count = 4;
  double duration_ms = 600000.0;
  double step_ms = 1000.0;
  std::uint64_t train_seed = 101;
  std::uint64_t test_seed = 202;
};

struct RunConfig {
  std::uint64_t seed = 1;
  EnvConfig env;
  TrainConfig train;
  EvalConfig eval;
  SelectMode eval_mode = SelectMode::kGreedy;
  TraceGenConfig traces;
  std::filesystem::path train_trace_dir;
  std::filesystem::path test_trace_dir;
  std::filesystem::path out_dir;

  /// Validates every nested configuration.
  void validate() const;
  /// Hex digest of everything that fixes the network shape and the
  /// environment semantics (sensors, p, j, attempts, layer sizes).
  std::string config_hash() const;
};

/// The ten-sensor experiment: L_n = 50(n+1) B, tau_n = 30 + 20n ms,
/// lambda_n = 1000(N - n)/N, p = 0.9, gamma = 0.9, learning rates 1e-3,
/// entropy weights 5 -> 0.
RunConfig paper_iv_defaults();

/// Parses a JSON document. `"defaults": "paper-iv"` starts from the preset;
/// other keys overlay it. Unknown keys are rejected. Relative paths resolve
/// against `base_dir`.
RunConfig parse_run_config(const std::string& json_text,
                           const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// Builds `count` traces named `{prefix}_{i}`, seeds derived from `seed`.
TraceSet generate_trace_set(const TraceGenConfig& cfg, int count, std::uint64_t seed,
                            const std::string& prefix);

}  // namespace aoi
