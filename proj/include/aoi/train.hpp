#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "aoi/checkpoint.hpp"
#include "aoi/env.hpp"
#include "aoi/nn.hpp"
#include "aoi/traces.hpp"

namespace aoi {

struct EntropyStage {
  double weight = 0.0;
  int episodes = 0;
};

/// Weights 5, 2, 1, 0.5, 0.1, 0 with `episodes_per_stage` each.
std::vector<EntropyStage> default_entropy_schedule(int episodes_per_stage);

struct TrainConfig {
  double gamma = 0.9;
  double actor_lr = 1e-3;
  double critic_lr = 1e-3;
  std::vector<EntropyStage> entropy_schedule = default_entropy_schedule(100);
  int episode_len = 500;
  int rollout_len = 50;
  int workers = 1;
  std::uint64_t seed = 1;
  OptimizerKind optimizer = OptimizerKind::kRmsProp;
  /// Rewards are multiplied by this before entering TD targets.
  double reward_scale = 1e-3;
  NetSizes net;
  double age_scale_ms = 100.0;

  void validate() const;
};

struct Transition {
  Observation state;
  int action = 0;
  double reward = 0.0;
  Observation next_state;
  double value = 0.0;       // V(s_k) from the critic used for the targets
  double next_value = 0.0;  // V(s_{k+1})
  double target = 0.0;      // scaled reward + gamma * next_value
  double advantage = 0.0;   // target - value

  // Forward passes reused by the update when parameters are unchanged.
  Features features;
  ForwardCache actor_cache;
  ForwardCache critic_cache;
  bool actor_cached = false;
  bool critic_cached = false;
};

struct Trajectory {
  FeatureScale scale;
  std::vector<Transition> records;
};

/// Runs `rollout_len` jobs: observe, sample from the actor, step.
Trajectory rollout(Env& env, const Network& actor, const FeatureScale& scale, int rollout_len,
                   Rng& rng);

/// target_k = reward_scale * R_k + gamma * V(s_{k+1}); A_k = target_k - V(s_k).
void compute_advantages(Trajectory& traj, const Network& critic, double gamma,
                        double reward_scale = 1.0);

/// sum_k [A_k * grad log pi(a_k | s_k) + beta * grad H(pi(. | s_k))].
Gradient actor_gradient(const Network& actor, const Trajectory& traj, double beta);
/// Gradient of sum_k (target_k - V(s_k))^2.
Gradient critic_gradient(const Network& critic, const Trajectory& traj);

/// Ascends the actor objective with step `lr`.
void actor_step(Network& actor, const Trajectory& traj, double lr, double beta, Optimizer& opt);
/// Descends the summed squared TD error with step `lr`.
void critic_step(Network& critic, const Trajectory& traj, double lr, Optimizer& opt);

struct LearningCurveRow {
  int stage = 0;
  double beta = 0.0;
  int episode = 0;
  double mean_reward = 0.0;
  double mean_aoi = 0.0;
  long long violations_total = 0;
};

void write_learning_curve(const std::vector<LearningCurveRow>& rows, std::ostream& out);

struct TrainOptions {
  /// When set, `ckpt_stage{s}.json` and `learning_curve.csv` are written here.
  std::filesystem::path out_dir;
  std::string config_hash;
  /// Starting parameters; freshly initialized from the seed when absent.
  const Checkpoint* warm_start = nullptr;
  std::function<void(const LearningCurveRow&)> on_episode;
};

struct TrainResult {
  Checkpoint final_checkpoint;
  std::vector<Checkpoint> stage_checkpoints;
  std::vector<LearningCurveRow> curve;
};

/// Throughput normalizer used for features: mean of the traces' mean rates.
FeatureScale feature_scale_for(const TraceSet& traces, double age_scale_ms);

/// Runs the entropy schedule stage by stage, each stage continuing from the
/// previous one's parameters. Throws NumericError on divergence after writing
/// `ckpt_last_good.json` (when an output directory is set).
TrainResult train(const EnvConfig& env_config, const TraceSet& traces, const TrainConfig& config,
                  const TrainOptions& options = {});

}  // namespace aoi
