#include "aoi/train.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <thread>

#include "aoi/error.hpp"

namespace aoi {

std::vector<EntropyStage> default_entropy_schedule(int episodes_per_stage) {
  std::vector<EntropyStage> out;
  for (double w : {5.0, 2.0, 1.0, 0.5, 0.1, 0.0}) out.push_back({w, episodes_per_stage});
  return out;
}

void TrainConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma must be in [0, 1)");
  if (!(actor_lr > 0.0) || !(critic_lr > 0.0)) throw ConfigError("learning rates must be > 0");
  if (entropy_schedule.empty()) throw ConfigError("entropy schedule is empty");
  for (std::size_t i = 0; i < entropy_schedule.size(); ++i) {
    const auto& s = entropy_schedule[i];
    if (!(s.weight >= 0.0)) throw ConfigError("entropy weights must be >= 0");
    if (s.episodes < 0) throw ConfigError("entropy stage episode counts must be >= 0");
    if (i > 0 && s.weight > entropy_schedule[i - 1].weight)
      throw ConfigError("entropy weights must be non-increasing");
  }
  if (entropy_schedule.back().weight != 0.0)
    throw ConfigError("the last entropy stage must have weight 0");
  if (episode_len < 1 || rollout_len < 1) throw ConfigError("episode and rollout lengths must be >= 1");
  if (rollout_len > episode_len) throw ConfigError("rollout_len must not exceed episode_len");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (!(reward_scale > 0.0)) throw ConfigError("reward_scale must be > 0");
  if (!(age_scale_ms > 0.0)) throw ConfigError("age_scale_ms must be > 0");
  if (net.filters < 1 || net.kernel < 1 || net.hidden < 1)
    throw ConfigError("network sizes must be >= 1");
}

Trajectory rollout(Env& env, const Network& actor, const FeatureScale& scale, int rollout_len,
                   Rng& rng) {
  Trajectory traj;
  traj.scale = scale;
  traj.records.reserve(static_cast<std::size_t>(std::max(rollout_len, 0)));
  for (int k = 0; k < rollout_len; ++k) {
    Transition t;
    t.state = env.observe();
    t.features = featurize(t.state, scale);
    forward(actor, t.features, t.actor_cache);
    t.actor_cached = true;
    const auto probs = softmax(t.actor_cache.out);
    t.action = static_cast<int>(rng.categorical(probs));
    StepResult r = env.step(t.action);
    t.reward = r.reward;
    t.next_state = std::move(r.observation);
    traj.records.push_back(std::move(t));
  }
  return traj;
}

void compute_advantages(Trajectory& traj, const Network& critic, double gamma,
                        double reward_scale) {
  auto& recs = traj.records;
  for (auto& t : recs) {
    if (t.features.window.empty() && t.features.extra.empty())
      t.features = featurize(t.state, traj.scale);
    forward(critic, t.features, t.critic_cache);
    t.critic_cached = true;
    t.value = t.critic_cache.out[0];
  }
  for (std::size_t k = 0; k < recs.size(); ++k) {
    auto& t = recs[k];
    if (k + 1 < recs.size() && recs[k + 1].state == t.next_state)
      t.next_value = recs[k + 1].value;
    else
      t.next_value = forward_critic(critic, featurize(t.next_state, traj.scale));
    t.target = reward_scale * t.reward + gamma * t.next_value;
    t.advantage = t.target - t.value;
    if (!std::isfinite(t.advantage)) throw NumericError("non-finite advantage");
  }
}

namespace {

void accumulate_actor(const Network& actor, const Trajectory& traj, double beta, bool reuse,
                      Gradient& g) {
  ForwardCache scratch;
  std::vector<double> go(static_cast<std::size_t>(actor.shape().outputs));
  for (const auto& t : traj.records) {
    Features tmp;
    const Features* fp = &t.features;
    if (t.features.window.empty() && t.features.extra.empty()) {
      tmp = featurize(t.state, traj.scale);
      fp = &tmp;
    }
    const Features& f = *fp;
    const ForwardCache* c = &t.actor_cache;
    if (!reuse || !t.actor_cached) {
      forward(actor, f, scratch);
      c = &scratch;
    }
    const auto probs = softmax(c->out);
    policy_logit_grad(probs, t.action, t.advantage, beta, go);
    backward(actor, f, *c, go, 1.0, g);
  }
}

void accumulate_critic(const Network& critic, const Trajectory& traj, bool reuse, Gradient& g) {
  ForwardCache scratch;
  for (const auto& t : traj.records) {
    Features tmp;
    const Features* fp = &t.features;
    if (t.features.window.empty() && t.features.extra.empty()) {
      tmp = featurize(t.state, traj.scale);
      fp = &tmp;
    }
    const Features& f = *fp;
    const ForwardCache* c = &t.critic_cache;
    if (!reuse || !t.critic_cached) {
      forward(critic, f, scratch);
      c = &scratch;
    }
    const double go = -2.0 * (t.target - c->out[0]);
    backward(critic, f, *c, std::span<const double>(&go, 1), 1.0, g);
  }
}

}  // namespace

Gradient actor_gradient(const Network& actor, const Trajectory& traj, double beta) {
  Gradient g(actor.shape());
  accumulate_actor(actor, traj, beta, false, g);
  if (!g.all_finite()) throw NumericError("non-finite actor gradient");
  return g;
}

Gradient critic_gradient(const Network& critic, const Trajectory& traj) {
  Gradient g(critic.shape());
  accumulate_critic(critic, traj, false, g);
  if (!g.all_finite()) throw NumericError("non-finite critic gradient");
  return g;
}

void actor_step(Network& actor, const Trajectory& traj, double lr, double beta, Optimizer& opt) {
  apply_update(actor, actor_gradient(actor, traj, beta), lr, opt);
}

void critic_step(Network& critic, const Trajectory& traj, double lr, Optimizer& opt) {
  Gradient g = critic_gradient(critic, traj);
  g *= -1.0;
  apply_update(critic, g, lr, opt);
}

void write_learning_curve(const std::vector<LearningCurveRow>& rows, std::ostream& out) {
  out << "stage,beta,episode,mean_reward,mean_aoi,violations_total\n";
  out << std::setprecision(17);
  for (const auto& r : rows)
    out << r.stage << ',' << r.beta << ',' << r.episode << ',' << r.mean_reward << ','
        << r.mean_aoi << ',' << r.violations_total << '\n';
}

FeatureScale feature_scale_for(const TraceSet& traces, double age_scale_ms) {
  FeatureScale s;
  s.age_ms = age_scale_ms;
  double acc = 0.0;
  for (const auto& t : traces) acc += t->mean_rate();
  s.throughput = traces.empty() ? 1.0 : acc / static_cast<double>(traces.size());
  return s;
}

namespace {

/// Parameters and optimizer state owned by the single updater.
struct SharedModel {
  Network actor;
  Network critic;
  Optimizer actor_opt;
  Optimizer critic_opt;
  std::mutex mu;
};

struct StageContext {
  const EnvConfig& env_config;
  const TraceSet& traces;
  const TrainConfig& config;
  const FeatureScale& scale;
  int stage;
  double beta;
};

struct EpisodeStats {
  double reward_sum = 0.0;
  double aoi_sum = 0.0;
  long long violations = 0;
};

/// One episode against parameter snapshots; each rollout's gradients are
/// applied to the shared model under its lock, then snapshots refresh.
LearningCurveRow run_episode(const StageContext& ctx, int episode, Env& env, SharedModel& model) {
  const auto& cfg = ctx.config;
  Rng ep_rng(derive_seed(cfg.seed, "episode", static_cast<std::uint64_t>(ctx.stage),
                         static_cast<std::uint64_t>(episode)));
  const auto& trace = ctx.traces[ep_rng.uniform_index(ctx.traces.size())];
  const double offset = ep_rng.uniform(0.0, trace->duration_ms());
  const std::uint64_t env_seed = ep_rng.next_u64();
  Rng act_rng(derive_seed(cfg.seed, "actions", static_cast<std::uint64_t>(ctx.stage),
                          static_cast<std::uint64_t>(episode)));
  env.reset(trace, env_seed, offset);

  Network actor, critic;
  {
    std::lock_guard lock(model.mu);
    actor = model.actor;
    critic = model.critic;
  }
  EpisodeStats stats;
  const double n_sensors = static_cast<double>(ctx.env_config.num_sensors());
  int remaining = cfg.episode_len;
  Gradient ga(actor.shape());
  Gradient gc(critic.shape());
  while (remaining > 0) {
    const int len = std::min(cfg.rollout_len, remaining);
    remaining -= len;
    Trajectory traj = rollout(env, actor, ctx.scale, len, act_rng);
    compute_advantages(traj, critic, cfg.gamma, cfg.reward_scale);
    ga.zero();
    gc.zero();
    accumulate_actor(actor, traj, ctx.beta, true, ga);
    accumulate_critic(critic, traj, true, gc);
    gc *= -1.0;
    if (!ga.all_finite() || !gc.all_finite())
      throw NumericError("non-finite gradient at stage " + std::to_string(ctx.stage) +
                         ", episode " + std::to_string(episode));

    for (const auto& t : traj.records) {
      stats.reward_sum += t.reward;
      double age_sum = 0.0;
      for (std::size_t n = 0; n < t.next_state.ages.size(); ++n) {
        age_sum += t.next_state.ages[n];
        if (t.next_state.ages[n] > ctx.env_config.sensors[n].threshold_ms) ++stats.violations;
      }
      stats.aoi_sum += age_sum / n_sensors;
    }

    std::lock_guard lock(model.mu);
    apply_update(model.actor, ga, cfg.actor_lr, model.actor_opt);
    apply_update(model.critic, gc, cfg.critic_lr, model.critic_opt);
    actor = model.actor;
    critic = model.critic;
  }
  LearningCurveRow row;
  row.stage = ctx.stage;
  row.beta = ctx.beta;
  row.episode = episode;
  row.mean_reward = stats.reward_sum / cfg.episode_len;
  row.mean_aoi = stats.aoi_sum / cfg.episode_len;
  row.violations_total = stats.violations;
  return row;
}

}  // namespace

TrainResult train(const EnvConfig& env_config, const TraceSet& traces, const TrainConfig& config,
                  const TrainOptions& options) {
  env_config.validate();
  config.validate();
  if (traces.empty()) throw ConfigError("training needs at least one trace");

  const FeatureScale scale = options.warm_start ? options.warm_start->meta.scale
                                                : feature_scale_for(traces, config.age_scale_ms);
  SharedModel model;
  if (options.warm_start) {
    model.actor = options.warm_start->actor;
    model.critic = options.warm_start->critic;
    if (!(model.actor.shape() == actor_shape(env_config, config.net)))
      throw ShapeError("warm-start checkpoint does not match the environment");
  } else {
    model.actor = init_params(actor_shape(env_config, config.net),
                              derive_seed(config.seed, "actor-init"));
    model.critic = init_params(critic_shape(env_config, config.net),
                               derive_seed(config.seed, "critic-init"));
  }
  model.actor_opt.kind = config.optimizer;
  model.critic_opt.kind = config.optimizer;

  auto make_checkpoint = [&](int stage, double beta) {
    Checkpoint c;
    c.meta.num_sensors = static_cast<int>(env_config.num_sensors());
    c.meta.history_len = env_config.history_len;
    c.meta.filters = config.net.filters;
    c.meta.kernel = config.net.kernel;
    c.meta.hidden = config.net.hidden;
    c.meta.seed = config.seed;
    c.meta.entropy_stage = stage;
    c.meta.entropy_weight = beta;
    c.meta.config_hash = options.config_hash;
    c.meta.scale = scale;
    c.actor = model.actor;
    c.critic = model.critic;
    return c;
  };

  if (!options.out_dir.empty()) std::filesystem::create_directories(options.out_dir);

  TrainResult result;
  std::mutex rows_mu;
  for (std::size_t s = 0; s < config.entropy_schedule.size(); ++s) {
    const auto& stage = config.entropy_schedule[s];
    const StageContext ctx{env_config, traces, config, scale, static_cast<int>(s), stage.weight};
    Checkpoint last_good = make_checkpoint(static_cast<int>(s), stage.weight);
    std::vector<LearningCurveRow> stage_rows;
    int next_episode = 0;
    std::exception_ptr failure;

    auto worker = [&] {
      Env env(env_config);
      while (true) {
        int episode;
        {
          std::lock_guard lock(rows_mu);
          if (failure || next_episode >= stage.episodes) return;
          episode = next_episode++;
        }
        try {
          LearningCurveRow row = run_episode(ctx, episode, env, model);
          std::lock_guard lock(rows_mu);
          stage_rows.push_back(row);
          if (options.on_episode) options.on_episode(row);
        } catch (...) {
          std::lock_guard lock(rows_mu);
          if (!failure) failure = std::current_exception();
          return;
        }
        if (config.workers == 1) {
          // Cheap for one worker: keeps a restorable copy at episode granularity.
          std::lock_guard lock(model.mu);
          last_good.actor = model.actor;
          last_good.critic = model.critic;
        }
      }
    };

    if (config.workers == 1) {
      worker();
    } else {
      std::vector<std::jthread> pool;
      for (int w = 0; w < config.workers; ++w) pool.emplace_back(worker);
    }

    std::sort(stage_rows.begin(), stage_rows.end(),
              [](const auto& a, const auto& b) { return a.episode < b.episode; });
    result.curve.insert(result.curve.end(), stage_rows.begin(), stage_rows.end());

    if (failure) {
      if (!options.out_dir.empty()) {
        save_checkpoint(last_good, options.out_dir / "ckpt_last_good.json");
        std::ofstream curve(options.out_dir / "learning_curve.csv");
        write_learning_curve(result.curve, curve);
      }
      std::rethrow_exception(failure);
    }

    Checkpoint ckpt = make_checkpoint(static_cast<int>(s), stage.weight);
    if (!options.out_dir.empty())
      save_checkpoint(ckpt, options.out_dir / ("ckpt_stage" + std::to_string(s) + ".json"));
    result.stage_checkpoints.push_back(std::move(ckpt));
  }

  result.final_checkpoint = result.stage_checkpoints.back();
  if (!options.out_dir.empty()) {
    std::ofstream curve(options.out_dir / "learning_curve.csv");
    write_learning_curve(result.curve, curve);
  }
  return result;
}

}  // namespace aoi
