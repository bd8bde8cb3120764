#include "aoi/traces.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "aoi/error.hpp"
#include "aoi/rng.hpp"

namespace aoi {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end && std::isfinite(out);
}

}  // namespace

Trace::Trace(std::string id, std::vector<TraceSample> samples, double duration_ms)
    : id_(std::move(id)), samples_(std::move(samples)), duration_ms_(duration_ms) {
  if (samples_.empty()) throw ConfigError("trace '" + id_ + "' has no samples");
  if (samples_.front().time_ms != 0.0)
    throw ConfigError("trace '" + id_ + "' must start at time 0");
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const auto& s = samples_[i];
    if (!(s.rate > 0.0) || !std::isfinite(s.rate))
      throw ConfigError("trace '" + id_ + "' has non-positive rate at sample " +
                        std::to_string(i));
    if (i > 0 && !(s.time_ms > samples_[i - 1].time_ms))
      throw ConfigError("trace '" + id_ + "' has non-increasing time at sample " +
                        std::to_string(i));
  }
  if (!(duration_ms_ > 0.0) || !std::isfinite(duration_ms_) ||
      duration_ms_ < samples_.back().time_ms)
    throw ConfigError("trace '" + id_ + "' has invalid duration");
}

double Trace::rate_at(double t_ms) const {
  double t = std::fmod(t_ms, duration_ms_);
  if (t < 0.0) t += duration_ms_;
  auto it = std::upper_bound(samples_.begin(), samples_.end(), t,
                             [](double v, const TraceSample& s) { return v < s.time_ms; });
  return std::prev(it)->rate;
}

double Trace::mean_rate() const {
  double acc = 0.0;
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const double end = i + 1 < samples_.size() ? samples_[i + 1].time_ms : duration_ms_;
    acc += samples_[i].rate * (end - samples_[i].time_ms);
  }
  return acc / duration_ms_;
}

Trace parse_trace(std::istream& in, std::string id) {
  std::vector<TraceSample> samples;
  std::string line;
  int line_no = 0;
  bool seen_data = false;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view v = trim(line);
    if (v.empty() || v.front() == '#') continue;
    if (!seen_data && v == "time_ms,throughput_kBps") {
      seen_data = true;
      continue;
    }
    seen_data = true;
    const auto comma = v.find(',');
    double t = 0.0;
    double rate = 0.0;
    if (comma == std::string_view::npos || !parse_double(v.substr(0, comma), t) ||
        !parse_double(v.substr(comma + 1), rate))
      throw ParseError("malformed line " + std::to_string(line_no), line_no);
    if (t < 0.0)
      throw ParseError("negative time at line " + std::to_string(line_no), line_no);
    if (samples.empty() && t != 0.0)
      throw ParseError("first sample must be at time 0 (line " + std::to_string(line_no) + ")",
                       line_no);
    if (!samples.empty() && !(t > samples.back().time_ms))
      throw ParseError("non-monotone time at line " + std::to_string(line_no), line_no);
    if (!(rate > 0.0))
      throw ParseError("non-positive rate at line " + std::to_string(line_no), line_no);
    samples.push_back({t, rate});  // 1 kB/s == 1 B/ms
  }
  if (samples.empty()) throw ParseError("trace has no samples", line_no);
  double duration = samples.back().time_ms + 1000.0;
  if (samples.size() > 1) {
    const auto n = samples.size();
    duration = samples[n - 1].time_ms + (samples[n - 1].time_ms - samples[n - 2].time_ms);
  }
  return Trace(std::move(id), std::move(samples), duration);
}

Trace load_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open trace file " + path.string());
  try {
    return parse_trace(in, path.stem().string());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

void write_trace(const Trace& t, std::ostream& out) {
  out << "time_ms,throughput_kBps\n";
  out << std::setprecision(17);
  for (const auto& s : t.samples()) out << s.time_ms << ',' << s.rate << '\n';
}

void save_trace(const Trace& t, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write trace file " + path.string());
  write_trace(t, out);
}

TraceSet load_trace_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw ConfigError("trace directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".csv")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError("no *.csv traces in " + dir.string());
  TraceSet out;
  for (const auto& f : files) out.push_back(std::make_shared<const Trace>(load_trace(f)));
  return out;
}

SyntheticKind parse_synthetic_kind(std::string_view name) {
  if (name == "constant") return SyntheticKind::kConstant;
  if (name == "two-level-markov") return SyntheticKind::kTwoLevelMarkov;
  if (name == "lognormal-walk") return SyntheticKind::kLognormalWalk;
  throw ConfigError("unknown trace kind '" + std::string(name) + "'");
}

std::string_view to_string(SyntheticKind kind) {
  switch (kind) {
    case SyntheticKind::kConstant: return "constant";
    case SyntheticKind::kTwoLevelMarkov: return "two-level-markov";
    case SyntheticKind::kLognormalWalk: return "lognormal-walk";
  }
  return "?";
}

Trace gen_synthetic(SyntheticKind kind, const SyntheticParams& p, double duration_ms,
                    double step_ms, std::uint64_t seed, std::string id) {
  if (!(duration_ms > 0.0) || !(step_ms > 0.0))
    throw ConfigError("synthetic trace needs duration > 0 and step > 0");
  const auto count = static_cast<std::size_t>(std::ceil(duration_ms / step_ms));
  Rng rng(derive_seed(seed, "synthetic-trace"));
  std::vector<TraceSample> samples;
  samples.reserve(count);

  switch (kind) {
    case SyntheticKind::kConstant: {
      if (!(p.rate > 0.0)) throw ConfigError("constant trace needs rate > 0");
      for (std::size_t i = 0; i < count; ++i) samples.push_back({i * step_ms, p.rate});
      break;
    }
    case SyntheticKind::kTwoLevelMarkov: {
      if (!(p.low > 0.0) || !(p.high > 0.0))
        throw ConfigError("two-level-markov needs low > 0 and high > 0");
      if (!(p.p_switch >= 0.0 && p.p_switch <= 1.0))
        throw ConfigError("two-level-markov needs p_switch in [0,1]");
      bool high = rng.bernoulli(0.5);
      for (std::size_t i = 0; i < count; ++i) {
        if (i > 0 && rng.bernoulli(p.p_switch)) high = !high;
        samples.push_back({i * step_ms, high ? p.high : p.low});
      }
      break;
    }
    case SyntheticKind::kLognormalWalk: {
      if (!(p.mean > 0.0) || !(p.min_rate > 0.0) || !(p.max_rate >= p.min_rate) ||
          !(p.sigma >= 0.0) || !(p.reversion >= 0.0 && p.reversion <= 1.0))
        throw ConfigError("lognormal-walk needs mean > 0, 0 < min_rate <= max_rate, "
                          "sigma >= 0, reversion in [0,1]");
      const double log_mean = std::log(p.mean);
      const double lo = std::log(p.min_rate);
      const double hi = std::log(p.max_rate);
      double x = log_mean;
      for (std::size_t i = 0; i < count; ++i) {
        if (i > 0) x += p.reversion * (log_mean - x) + p.sigma * rng.normal();
        x = std::clamp(x, lo, hi);
        samples.push_back({i * step_ms, std::exp(x)});
      }
      break;
    }
  }
  return Trace(std::move(id), std::move(samples), static_cast<double>(count) * step_ms);
}

}  // namespace aoi
