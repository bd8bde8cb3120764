#pragma once

// Independent reference computations used by the unit and acceptance suites.
// Nothing here calls the code path it is used to check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <vector>

#include "aoi/env.hpp"
#include "aoi/nn.hpp"
#include "aoi/rng.hpp"

namespace aoi::oracle {

/// Straight-line network evaluation from the named layer views.
inline std::vector<double> reference_outputs(const Network& net, const Features& x) {
  const NetShape& s = net.shape();
  const auto cw = net.conv_w();
  const auto cb = net.conv_b();
  const auto dw = net.dense_w();
  const auto db = net.dense_b();
  const auto ow = net.out_w();
  const auto ob = net.out_b();
  const int P = s.window - s.kernel + 1;

  std::vector<double> inputs;
  for (int f = 0; f < s.filters; ++f) {
    for (int p = 0; p < P; ++p) {
      double z = cb[f];
      for (int k = 0; k < s.kernel; ++k) z += x.window[p + k] * cw[f * s.kernel + k];
      inputs.push_back(std::max(z, 0.0));
    }
  }
  for (double e : x.extra) inputs.push_back(e);

  std::vector<double> hidden(s.hidden);
  for (int h = 0; h < s.hidden; ++h) {
    double z = db[h];
    for (std::size_t i = 0; i < inputs.size(); ++i) z += dw[h * inputs.size() + i] * inputs[i];
    hidden[h] = std::max(z, 0.0);
  }
  std::vector<double> out(s.outputs);
  for (int o = 0; o < s.outputs; ++o) {
    double z = ob[o];
    for (int h = 0; h < s.hidden; ++h) z += ow[o * s.hidden + h] * hidden[h];
    out[o] = z;
  }
  return out;
}

inline std::vector<double> reference_softmax(const std::vector<double>& z) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : z) m = std::max(m, v);
  double total = 0.0;
  for (double v : z) total += std::exp(v - m);
  std::vector<double> p;
  for (double v : z) p.push_back(std::exp(v - m) / total);
  return p;
}

/// Central finite differences of `f` over every parameter of `net`.
inline std::vector<double> finite_difference(Network net,
                                             const std::function<double(const Network&)>& f,
                                             double h = 1e-5) {
  std::vector<double> g(net.params().size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double orig = net.params()[i];
    net.params()[i] = orig + h;
    const double up = f(net);
    net.params()[i] = orig - h;
    const double down = f(net);
    net.params()[i] = orig;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor). The floor keeps coordinates
/// whose true gradient is ~0 from dominating through round-off.
inline double max_rel_error(const std::vector<double>& a, const std::vector<double>& b,
                            double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

/// Small network with weights drawn from U(-1, 1) and biases shifted so that
/// ReLU units are comfortably away from their kinks.
inline Network random_small_net(const NetShape& shape, std::uint64_t seed) {
  Network net(shape);
  Rng rng(seed);
  for (double& p : net.params()) p = rng.uniform(-1.0, 1.0);
  return net;
}

inline Features random_features(const NetShape& shape, Rng& rng) {
  Features f;
  for (int i = 0; i < shape.window; ++i) f.window.push_back(rng.uniform(0.1, 2.0));
  for (int i = 0; i < shape.extra; ++i) f.extra.push_back(rng.uniform(0.0, 2.0));
  return f;
}

/// Smallest |pre-activation| over all ReLU units; finite differences across
/// a kink are meaningless, so callers skip instances closer than `h`.
inline double min_relu_margin(const Network& net, const Features& x) {
  ForwardCache c;
  forward(net, x, c);
  double m = std::numeric_limits<double>::infinity();
  for (double v : c.conv_pre) m = std::min(m, std::abs(v));
  for (double v : c.hidden_pre) m = std::min(m, std::abs(v));
  return m;
}

struct GradientCheck {
  int networks = 0;
  double log_prob = 0.0;  // worst max-relative error per quantity
  double entropy = 0.0;
  double value = 0.0;
};

/// Compares analytic gradients with central differences on `count` random
/// small actor/critic pairs. Instances within `h` of a ReLU kink are redrawn.
inline GradientCheck check_gradients(int count, std::uint64_t seed, double h = 1e-5) {
  GradientCheck out;
  Rng rng(seed);
  while (out.networks < count) {
    NetShape actor_shape{5, 4, 3, 3, 4, 2 + static_cast<int>(rng.uniform_index(3))};
    NetShape critic_shape = actor_shape;
    critic_shape.outputs = 1;
    const Network actor = random_small_net(actor_shape, rng.next_u64());
    const Network critic = random_small_net(critic_shape, rng.next_u64());
    const Features x = random_features(actor_shape, rng);
    if (min_relu_margin(actor, x) < 1e3 * h || min_relu_margin(critic, x) < 1e3 * h) continue;
    const int action = static_cast<int>(rng.uniform_index(actor_shape.outputs));
    const double target = rng.uniform(-3.0, 3.0);

    auto log_prob = [&](const Network& n) {
      return std::log(reference_softmax(reference_outputs(n, x))[action]);
    };
    auto ent = [&](const Network& n) {
      double H = 0.0;
      for (double p : reference_softmax(reference_outputs(n, x))) H -= p * std::log(p);
      return H;
    };
    auto sq = [&](const Network& n) {
      const double v = reference_outputs(n, x)[0];
      return (target - v) * (target - v);
    };
    out.log_prob = std::max(out.log_prob, max_rel_error(grad_log_prob(actor, x, action).values,
                                                        finite_difference(actor, log_prob, h)));
    out.entropy = std::max(out.entropy, max_rel_error(grad_entropy(actor, x).values,
                                                      finite_difference(actor, ent, h)));
    out.value = std::max(out.value, max_rel_error(grad_value_sq_err(critic, x, target).values,
                                                  finite_difference(critic, sq, h)));
    ++out.networks;
  }
  return out;
}

/// Re-applies the age recursion from logged (action, duration) pairs.
inline std::vector<std::vector<double>> replay_ages(std::size_t n_sensors,
                                                    const std::vector<int>& actions,
                                                    const std::vector<double>& durations) {
  std::vector<std::vector<double>> out;
  std::vector<double> a(n_sensors, 0.0);
  for (std::size_t k = 0; k < actions.size(); ++k) {
    std::vector<double> next(n_sensors);
    for (std::size_t n = 0; n < n_sensors; ++n)
      next[n] = static_cast<int>(n) == actions[k] ? durations[k] : a[n] + durations[k];
    a = next;
    out.push_back(a);
  }
  return out;
}

/// Optimal long-run average of the per-job objective
///   (1/N) sum_n a_n + sum_n lambda_n [a_n > tau_n]
/// for a deterministic system (p = 1, constant rate) by relative value
/// iteration on the grid of reachable ages. Ages are clamped at `cap_ms`.
/// An aperiodicity transform (mixing weight 1/2) guarantees convergence.
inline double tiny_mdp_optimal_average(const EnvConfig& env, double rate, double cap_ms,
                                       int iterations = 20000) {
  const std::size_t N = env.num_sensors();
  std::vector<double> service(N);
  for (std::size_t n = 0; n < N; ++n) service[n] = env.sensors[n].packet_bytes / rate;

  // Enumerate reachable states from all-zero ages.
  std::map<std::vector<double>, int> index;
  std::vector<std::vector<double>> states;
  std::vector<std::vector<int>> next;
  std::vector<std::vector<double>> cost;
  auto intern = [&](const std::vector<double>& s) {
    auto [it, inserted] = index.emplace(s, static_cast<int>(states.size()));
    if (inserted) states.push_back(s);
    return it->second;
  };
  intern(std::vector<double>(N, 0.0));
  for (std::size_t i = 0; i < states.size(); ++i) {
    std::vector<int> nx(N);
    std::vector<double> cs(N);
    for (std::size_t a = 0; a < N; ++a) {
      std::vector<double> s = states[i];
      for (std::size_t n = 0; n < N; ++n) s[n] = n == a ? service[a] : s[n] + service[a];
      double c = 0.0;
      for (std::size_t n = 0; n < N; ++n) {
        c += s[n] / static_cast<double>(N);
        if (s[n] > env.sensors[n].threshold_ms) c += env.sensors[n].penalty;
        s[n] = std::min(s[n], cap_ms);
      }
      nx[a] = intern(s);
      cs[a] = c;
    }
    next.push_back(nx);
    cost.push_back(cs);
  }

  // Transformed chain: stay put with probability 1/2, else follow the action.
  // Same stationary distributions and gain; it is aperiodic, so RVI converges.
  std::vector<double> h(states.size(), 0.0), t(states.size());
  double gain = 0.0;
  for (int it = 0; it < iterations; ++it) {
    for (std::size_t i = 0; i < states.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < N; ++a)
        best = std::min(best, cost[i][a] + 0.5 * h[i] + 0.5 * h[next[i][a]]);
      t[i] = best;
    }
    gain = t[0] - h[0];
    const double ref = t[0];
    for (std::size_t i = 0; i < states.size(); ++i) h[i] = t[i] - ref;
  }
  return gain;
}

}  // namespace aoi::oracle
