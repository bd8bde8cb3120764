#include "aoi/schedulers.hpp"

#include <cmath>

#include "aoi/error.hpp"

namespace aoi {

int edf_select(std::span<const double> ages, std::span<const double> thresholds) {
  if (ages.size() != thresholds.size() || ages.empty())
    throw ShapeError("edf_select needs equal-length, non-empty ages and thresholds");
  int best = 0;
  double best_slack = thresholds[0] - ages[0];
  for (std::size_t n = 1; n < ages.size(); ++n) {
    const double slack = thresholds[n] - ages[n];
    if (slack < best_slack) {
      best_slack = slack;
      best = static_cast<int>(n);
    }
  }
  return best;
}

std::vector<double> osrp_probs(std::span<const double> thresholds) {
  if (thresholds.empty()) throw ConfigError("osrp needs at least one threshold");
  double total = 0.0;
  for (double t : thresholds) {
    if (!(t > 0.0)) throw ConfigError("osrp thresholds must be > 0");
    total += 1.0 / t;
  }
  std::vector<double> q;
  q.reserve(thresholds.size());
  for (double t : thresholds) q.push_back((1.0 / t) / total);
  return q;
}

int osrp_select(std::span<const double> probs, Rng& rng) {
  if (probs.empty()) throw ConfigError("empty distribution");
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw ConfigError("distribution has a negative or NaN entry");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("distribution does not sum to 1");
  return static_cast<int>(rng.categorical(probs));
}

SelectMode parse_select_mode(std::string_view name) {
  if (name == "sample") return SelectMode::kSample;
  if (name == "greedy") return SelectMode::kGreedy;
  throw ConfigError("unknown mode '" + std::string(name) + "' (expected sample|greedy)");
}

std::string_view to_string(SelectMode mode) {
  return mode == SelectMode::kSample ? "sample" : "greedy";
}

int argmax(std::span<const double> v) {
  int best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  return best;
}

int policy_select(const Observation& obs, const Network& actor, const FeatureScale& scale,
                  SelectMode mode, Rng& rng) {
  if (static_cast<int>(obs.ages.size()) != actor.shape().outputs)
    throw ShapeError("observation has " + std::to_string(obs.ages.size()) +
                     " sensors but the policy has " + std::to_string(actor.shape().outputs) +
                     " outputs");
  const auto probs = forward_actor(actor, featurize(obs, scale));
  if (mode == SelectMode::kGreedy) return argmax(probs);
  return static_cast<int>(rng.categorical(probs));
}

int EdfScheduler::select(const Observation& obs, Rng&) {
  return edf_select(obs.ages, thresholds_);
}

int OsrpScheduler::select(const Observation&, Rng& rng) {
  return static_cast<int>(rng.categorical(probs_));
}

PolicyScheduler::PolicyScheduler(Network actor, FeatureScale scale, SelectMode mode)
    : actor_(std::move(actor)), scale_(scale), mode_(mode) {}

int PolicyScheduler::select(const Observation& obs, Rng& rng) {
  return policy_select(obs, actor_, scale_, mode_, rng);
}

}  // namespace aoi
