#include "aoi/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "aoi/error.hpp"

namespace aoi {

Metrics evaluate(Scheduler& scheduler, const EnvConfig& env_config, const TraceSet& traces,
                 const EvalConfig& config) {
  env_config.validate();
  if (config.jobs < 1) throw ConfigError("evaluation needs at least one job");
  if (traces.empty()) throw ConfigError("evaluation needs at least one trace");

  const std::size_t n_sensors = env_config.num_sensors();
  Metrics m;
  m.scheduler = scheduler.name();
  m.jobs = config.jobs;
  m.avg_aoi.assign(n_sensors, 0.0);
  m.violation_count.assign(n_sensors, 0);
  if (config.keep_samples) {
    m.aoi_samples.assign(n_sensors, {});
    for (auto& s : m.aoi_samples) s.reserve(config.jobs);
  }

  Env env(env_config);
  Rng offsets(derive_seed(config.seed, "eval-offsets"));
  Rng decisions(derive_seed(config.seed, "eval-scheduler"));
  const std::size_t segments = traces.size();
  double age_total = 0.0;
  double neg_reward_total = 0.0;

  for (std::size_t seg = 0; seg < segments; ++seg) {
    const std::size_t share = config.jobs / segments + (seg < config.jobs % segments ? 1 : 0);
    if (share == 0) continue;
    const auto& trace = traces[seg];
    Observation obs =
        env.reset(trace, derive_seed(config.seed, "eval-env", seg),
                  offsets.uniform(0.0, trace->duration_ms()));
    for (std::size_t k = 0; k < config.burn_in + share; ++k) {
      StepResult r = env.step(scheduler.select(obs, decisions));
      obs = std::move(r.observation);
      if (k < config.burn_in) continue;
      neg_reward_total += -r.reward;
      for (std::size_t n = 0; n < n_sensors; ++n) {
        const double a = obs.ages[n];
        m.avg_aoi[n] += a;
        age_total += a;
        if (r.violations[n]) ++m.violation_count[n];
        if (config.keep_samples) m.aoi_samples[n].push_back(a);
      }
    }
  }

  const double K = static_cast<double>(config.jobs);
  m.violation_freq.resize(n_sensors);
  for (std::size_t n = 0; n < n_sensors; ++n) {
    m.avg_aoi[n] /= K;
    m.violation_freq[n] = static_cast<double>(m.violation_count[n]) / K;
    m.penalty_term += env_config.sensors[n].penalty * m.violation_freq[n];
  }
  m.aoi_term = age_total / (K * static_cast<double>(n_sensors));
  m.objective = m.aoi_term + m.penalty_term;
  m.mean_neg_reward = neg_reward_total / K;
  return m;
}

std::vector<CdfPoint> cdf(std::span<const double> samples) {
  if (samples.empty()) throw ConfigError("cdf of an empty sample");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double total = static_cast<double>(sorted.size());
  std::vector<CdfPoint> out;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
    out.emplace_back(sorted[i], static_cast<double>(i + 1) / total);
  }
  out.back().second = 1.0;
  return out;
}

double cdf_at(std::span<const CdfPoint> curve, double x) {
  auto it = std::upper_bound(curve.begin(), curve.end(), x,
                             [](double v, const CdfPoint& p) { return v < p.first; });
  return it == curve.begin() ? 0.0 : std::prev(it)->second;
}

Comparison compare(std::span<const Metrics> metrics, const std::string& reference) {
  if (metrics.empty()) throw ConfigError("nothing to compare");
  auto ref = std::find_if(metrics.begin(), metrics.end(),
                          [&](const Metrics& m) { return m.scheduler == reference; });
  if (ref == metrics.end()) throw ConfigError("reference '" + reference + "' not among inputs");
  if (ref->objective == 0.0) throw ConfigError("reference objective is zero");
  const std::size_t n_sensors = ref->avg_aoi.size();
  Comparison c;
  c.reference = reference;
  for (const auto& m : metrics) {
    if (m.avg_aoi.size() != n_sensors || m.violation_freq.size() != n_sensors)
      throw ShapeError("scheduler '" + m.scheduler + "' has a different sensor count");
    c.names.push_back(m.scheduler);
    c.objectives.push_back(m.objective);
    c.normalized.push_back(m.objective / ref->objective);
    c.violation_freq.push_back(m.violation_freq);
    c.avg_aoi.push_back(m.avg_aoi);
  }
  return c;
}

void write_metrics_csv(std::span<const Metrics> metrics, std::ostream& out) {
  out << "scheduler,sensor,avg_aoi_ms,violation_freq\n" << std::setprecision(17);
  for (const auto& m : metrics)
    for (std::size_t n = 0; n < m.avg_aoi.size(); ++n)
      out << m.scheduler << ',' << n << ',' << m.avg_aoi[n] << ',' << m.violation_freq[n] << '\n';
}

void write_summary_csv(const Comparison& c, std::ostream& out) {
  out << "scheduler,objective,normalized_objective\n" << std::setprecision(17);
  for (std::size_t i = 0; i < c.names.size(); ++i)
    out << c.names[i] << ',' << c.objectives[i] << ',' << c.normalized[i] << '\n';
}

void write_cdf_csv(const Metrics& m, std::ostream& out) {
  out << "sensor,aoi_ms,cdf\n" << std::setprecision(17);
  for (std::size_t n = 0; n < m.aoi_samples.size(); ++n) {
    if (m.aoi_samples[n].empty()) continue;
    for (const auto& [v, f] : cdf(m.aoi_samples[n])) out << n << ',' << v << ',' << f << '\n';
  }
}

void write_table_csv(const Comparison& c, std::ostream& out) {
  out << "metric";
  for (const auto& name : c.names) out << ',' << name;
  out << '\n' << std::setprecision(6);
  out << "Normalized Objective";
  for (double v : c.normalized) out << ',' << v;
  out << '\n';
  const std::size_t n_sensors = c.avg_aoi.empty() ? 0 : c.avg_aoi.front().size();
  for (std::size_t n = 0; n < n_sensors; ++n) {
    out << "Pr AoI_" << n << " > tau_" << n << " (%)";
    for (const auto& v : c.violation_freq) out << ',' << 100.0 * v[n];
    out << '\n';
  }
  for (std::size_t n = 0; n < n_sensors; ++n) {
    out << "Avg sensor " << n << " (ms)";
    for (const auto& v : c.avg_aoi) out << ',' << v[n];
    out << '\n';
  }
}

namespace {

double parse_number(std::string_view s, int line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ParseError("bad number '" + std::string(s) + "' at line " + std::to_string(line), line);
  return v;
}

}  // namespace

std::vector<Metrics> read_metrics_csv(std::istream& in, std::span<const double> penalties) {
  std::vector<Metrics> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (line == "scheduler,sensor,avg_aoi_ms,violation_freq") continue;
    std::vector<std::string_view> cols;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      cols.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (cols.size() != 4)
      throw ParseError("expected 4 columns at line " + std::to_string(line_no), line_no);
    const std::string name(cols[0]);
    if (out.empty() || out.back().scheduler != name) {
      out.emplace_back();
      out.back().scheduler = name;
    }
    Metrics& m = out.back();
    const auto sensor = static_cast<std::size_t>(parse_number(cols[1], line_no));
    if (sensor != m.avg_aoi.size())
      throw ParseError("sensor rows out of order at line " + std::to_string(line_no), line_no);
    m.avg_aoi.push_back(parse_number(cols[2], line_no));
    m.violation_freq.push_back(parse_number(cols[3], line_no));
  }
  for (auto& m : out) {
    if (m.avg_aoi.size() != penalties.size())
      throw ShapeError("scheduler '" + m.scheduler + "' has " + std::to_string(m.avg_aoi.size()) +
                       " sensors; the configuration has " + std::to_string(penalties.size()));
    double age = 0.0;
    for (std::size_t n = 0; n < m.avg_aoi.size(); ++n) {
      age += m.avg_aoi[n];
      m.penalty_term += penalties[n] * m.violation_freq[n];
    }
    m.aoi_term = age / static_cast<double>(m.avg_aoi.size());
    m.objective = m.aoi_term + m.penalty_term;
  }
  return out;
}

}  // namespace aoi
