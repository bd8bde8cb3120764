#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aoi/env.hpp"
#include "aoi/nn.hpp"
#include "aoi/rng.hpp"

namespace aoi {

/// Earliest deadline first: argmin_n (tau_n - a_n), lowest index on ties.
int edf_select(std::span<const double> ages, std::span<const double> thresholds);

/// Stationary selection probabilities proportional to 1 / tau_n.
std::vector<double> osrp_probs(std::span<const double> thresholds);

/// Categorical draw. Rejects vectors with negative entries or a sum that is
/// not 1 within 1e-9.
int osrp_select(std::span<const double> probs, Rng& rng);

enum class SelectMode { kSample, kGreedy };

SelectMode parse_select_mode(std::string_view name);
std::string_view to_string(SelectMode mode);

/// Argmax with lowest-index tie-break.
int argmax(std::span<const double> v);

int policy_select(const Observation& obs, const Network& actor, const FeatureScale& scale,
                  SelectMode mode, Rng& rng);

class Scheduler {
 public:
  virtual ~Scheduler() = default;
  virtual std::string name() const = 0;
  virtual int select(const Observation& obs, Rng& rng) = 0;
};

class EdfScheduler final : public Scheduler {
 public:
  explicit EdfScheduler(std::vector<double> thresholds) : thresholds_(std::move(thresholds)) {}
  std::string name() const override { return "edf"; }
  int select(const Observation& obs, Rng& rng) override;

 private:
  std::vector<double> thresholds_;
};

class OsrpScheduler final : public Scheduler {
 public:
  explicit OsrpScheduler(std::span<const double> thresholds) : probs_(osrp_probs(thresholds)) {}
  std::string name() const override { return "osrp"; }
  int select(const Observation& obs, Rng& rng) override;
  const std::vector<double>& probs() const { return probs_; }

 private:
  std::vector<double> probs_;
};

class PolicyScheduler final : public Scheduler {
 public:
  PolicyScheduler(Network actor, FeatureScale scale, SelectMode mode);
  std::string name() const override { return "rl"; }
  int select(const Observation& obs, Rng& rng) override;

 private:
  Network actor_;
  FeatureScale scale_;
  SelectMode mode_;
};

}  // namespace aoi
