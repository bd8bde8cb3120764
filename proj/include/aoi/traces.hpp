#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace aoi {

/// One throughput sample. Time in milliseconds, rate in bytes per millisecond
/// (numerically equal to kB/s).
struct TraceSample {
  double time_ms = 0.0;
  double rate = 0.0;

  bool operator==(const TraceSample&) const = default;
};

/// Channel throughput over time with zero-order-hold playback that loops at
/// `duration_ms`. Immutable once constructed; safe to share across threads.
class Trace {
 public:
  /// Validates: non-empty, first time 0, strictly increasing times, positive
  /// rates, duration strictly greater than the last sample time.
  Trace(std::string id, std::vector<TraceSample> samples, double duration_ms);

  /// Rate of the last sample with time <= (t mod duration).
  double rate_at(double t_ms) const;

  const std::string& id() const { return id_; }
  const std::vector<TraceSample>& samples() const { return samples_; }
  double duration_ms() const { return duration_ms_; }

  /// Time-weighted mean rate over one period.
  double mean_rate() const;

  bool operator==(const Trace&) const = default;

 private:
  std::string id_;
  std::vector<TraceSample> samples_;
  double duration_ms_;
};

using TracePtr = std::shared_ptr<const Trace>;
using TraceSet = std::vector<TracePtr>;

/// Parses the `time_ms,throughput_kBps` CSV format. Comment lines start with
/// '#'; a header line is optional. Duration is the last time plus the last
/// inter-sample gap, or plus 1000 ms for a single sample.
Trace parse_trace(std::istream& in, std::string id);
Trace load_trace(const std::filesystem::path& path);

/// Writes `t` so that parse_trace reproduces it exactly.
void write_trace(const Trace& t, std::ostream& out);
void save_trace(const Trace& t, const std::filesystem::path& path);

/// Loads every `*.csv` in `dir`, sorted by filename.
TraceSet load_trace_dir(const std::filesystem::path& dir);

enum class SyntheticKind { kConstant, kTwoLevelMarkov, kLognormalWalk };

SyntheticKind parse_synthetic_kind(std::string_view name);
std::string_view to_string(SyntheticKind kind);

struct SyntheticParams {
  // constant
  double rate = 50.0;
  // two-level-markov: per-step probability of switching level
  double low = 20.0;
  double high = 200.0;
  double p_switch = 0.1;
  // lognormal-walk: mean-reverting random walk in log-rate, clamped
  double mean = 60.0;
  double sigma = 0.1;
  double reversion = 0.05;
  double min_rate = 5.0;
  double max_rate = 1000.0;
};

/// Deterministic given `seed`. One sample every `step_ms`; duration is an
/// exact multiple of the step so the generated file round-trips.
Trace gen_synthetic(SyntheticKind kind, const SyntheticParams& params,
                    double duration_ms, double step_ms, std::uint64_t seed,
                    std::string id = "synthetic");

}  // namespace aoi
