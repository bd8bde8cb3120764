#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "aoi/env.hpp"

namespace aoi {

/// Topology shared by the actor and the critic:
///   throughput window -> conv1d(filters, kernel, stride 1) -> relu
///   [conv features, extra inputs] -> dense(hidden) -> relu -> dense(outputs)
/// The actor applies a softmax to its outputs; the critic has one linear unit.
struct NetShape {
  int window = 5;    // throughput history length j
  int extra = 11;    // ages + last service time (N + 1)
  int filters = 128;
  int kernel = 4;
  int hidden = 128;
  int outputs = 10;

  int positions() const { return window - kernel + 1; }
  int conv_features() const { return filters * positions(); }
  int dense_inputs() const { return conv_features() + extra; }
  std::size_t param_count() const;
  void validate() const;

  bool operator==(const NetShape&) const = default;
};

struct NetSizes {
  int filters = 128;
  int kernel = 4;
  int hidden = 128;
};

NetShape actor_shape(const EnvConfig& env, const NetSizes& sizes = {});
NetShape critic_shape(const EnvConfig& env, const NetSizes& sizes = {});

/// Flat parameter vector with named layer views. Layout: conv_w [F x K],
/// conv_b [F], dense_w [H x D], dense_b [H], out_w [O x H], out_b [O].
class Network {
 public:
  Network() = default;
  explicit Network(const NetShape& shape);

  const NetShape& shape() const { return shape_; }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  std::span<double> conv_w() { return view(0, conv_w_size()); }
  std::span<double> conv_b() { return view(conv_b_off(), shape_.filters); }
  std::span<double> dense_w() { return view(dense_w_off(), dense_w_size()); }
  std::span<double> dense_b() { return view(dense_b_off(), shape_.hidden); }
  std::span<double> out_w() { return view(out_w_off(), out_w_size()); }
  std::span<double> out_b() { return view(out_b_off(), shape_.outputs); }
  std::span<const double> conv_w() const { return cview(0, conv_w_size()); }
  std::span<const double> conv_b() const { return cview(conv_b_off(), shape_.filters); }
  std::span<const double> dense_w() const { return cview(dense_w_off(), dense_w_size()); }
  std::span<const double> dense_b() const { return cview(dense_b_off(), shape_.hidden); }
  std::span<const double> out_w() const { return cview(out_w_off(), out_w_size()); }
  std::span<const double> out_b() const { return cview(out_b_off(), shape_.outputs); }

  bool all_finite() const;
  bool operator==(const Network&) const = default;

 private:
  std::size_t conv_w_size() const { return std::size_t(shape_.filters) * shape_.kernel; }
  std::size_t dense_w_size() const { return std::size_t(shape_.hidden) * shape_.dense_inputs(); }
  std::size_t out_w_size() const { return std::size_t(shape_.outputs) * shape_.hidden; }
  std::size_t conv_b_off() const { return conv_w_size(); }
  std::size_t dense_w_off() const { return conv_b_off() + shape_.filters; }
  std::size_t dense_b_off() const { return dense_w_off() + dense_w_size(); }
  std::size_t out_w_off() const { return dense_b_off() + shape_.hidden; }
  std::size_t out_b_off() const { return out_w_off() + out_w_size(); }
  std::span<double> view(std::size_t off, std::size_t n) { return {params_.data() + off, n}; }
  std::span<const double> cview(std::size_t off, std::size_t n) const {
    return {params_.data() + off, n};
  }

  NetShape shape_;
  std::vector<double> params_;
};

/// Same layout as the Network it differentiates.
struct Gradient {
  NetShape shape;
  std::vector<double> values;

  Gradient() = default;
  explicit Gradient(const NetShape& s) : shape(s), values(s.param_count(), 0.0) {}
  void zero() { std::fill(values.begin(), values.end(), 0.0); }
  Gradient& operator+=(const Gradient& other);
  Gradient& operator*=(double s);
  bool all_finite() const;
};

/// Input normalization: ages and durations divided by `age_ms`, throughput
/// divided by `throughput` (typically the mean trace rate).
struct FeatureScale {
  double age_ms = 100.0;
  double throughput = 1.0;

  bool operator==(const FeatureScale&) const = default;
};

struct Features {
  std::vector<double> window;  // conv path, length j
  std::vector<double> extra;   // dense path, ages then last service time
};

Features featurize(const Observation& obs, const FeatureScale& scale);

/// Intermediate activations kept for the backward pass.
struct ForwardCache {
  std::vector<double> conv_pre;    // [F x P], filter-major
  std::vector<double> dense_in;    // relu(conv_pre) followed by extra inputs
  std::vector<double> hidden_pre;  // [H]
  std::vector<double> hidden;      // [H]
  std::vector<double> out;         // logits or value, [O]
};

/// Raw network outputs (logits for the actor, value for the critic).
void forward(const Network& net, const Features& x, ForwardCache& cache);

/// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> logits);
double entropy(std::span<const double> probs);

std::vector<double> forward_actor(const Network& actor, const Features& x);
double forward_critic(const Network& critic, const Features& x);

/// Accumulates `scale * d(sum_o grad_out[o] * out[o]) / d(params)` into `acc`.
void backward(const Network& net, const Features& x, const ForwardCache& cache,
              std::span<const double> grad_out, double scale, Gradient& acc);

/// d log pi(action | x) / d params.
Gradient grad_log_prob(const Network& actor, const Features& x, int action);
/// d H(pi(. | x)) / d params.
Gradient grad_entropy(const Network& actor, const Features& x);
/// d (target - V(x))^2 / d params. Descend along it to fit the target.
Gradient grad_value_sq_err(const Network& critic, const Features& x, double target);

/// Logit gradient of advantage * log pi(action) + beta * H(pi), given probs.
void policy_logit_grad(std::span<const double> probs, int action, double advantage, double beta,
                       std::span<double> out);

enum class OptimizerKind { kPlain, kRmsProp };

OptimizerKind parse_optimizer_kind(std::string_view name);
std::string_view to_string(OptimizerKind kind);

struct Optimizer {
  OptimizerKind kind = OptimizerKind::kPlain;
  double decay = 0.99;
  double epsilon = 1e-6;
  std::vector<double> mean_square;  // sized lazily for RMS mode
};

/// Ascent step: params += lr * direction (plain), or the RMS-scaled variant
/// params += lr * g / sqrt(ms + eps) with ms = decay * ms + (1 - decay) g^2.
void apply_update(Network& net, const Gradient& direction, double lr, Optimizer& opt);

/// Fills `w` from U(-b, b) with b = sqrt(6 / (fan_in + fan_out)).
void glorot_uniform(std::span<double> w, int fan_in, int fan_out, Rng& rng);

/// Glorot-uniform weights, zero biases, deterministic in `seed`.
Network init_params(const NetShape& shape, std::uint64_t seed);

}  // namespace aoi
