#include "aoi/nn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "aoi/error.hpp"

namespace aoi {

namespace {

bool finite_span(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void check_input(const NetShape& shape, const Features& x) {
  if (static_cast<int>(x.window.size()) != shape.window ||
      static_cast<int>(x.extra.size()) != shape.extra)
    throw ShapeError("features (" + std::to_string(x.window.size()) + ", " +
                     std::to_string(x.extra.size()) + ") do not match network inputs (" +
                     std::to_string(shape.window) + ", " + std::to_string(shape.extra) + ")");
  if (!finite_span(x.window) || !finite_span(x.extra))
    throw NumericError("non-finite network input");
}

}  // namespace

std::size_t NetShape::param_count() const {
  const std::size_t f = filters, k = kernel, h = hidden, o = outputs;
  return f * k + f + h * static_cast<std::size_t>(dense_inputs()) + h + o * h + o;
}

void NetShape::validate() const {
  if (kernel < 1 || window < kernel)
    throw ShapeError("throughput window (" + std::to_string(window) +
                     ") must be at least the kernel width (" + std::to_string(kernel) + ")");
  if (filters < 1 || hidden < 1 || outputs < 1 || extra < 0)
    throw ShapeError("network layer sizes must be positive");
}

NetShape actor_shape(const EnvConfig& env, const NetSizes& sizes) {
  NetShape s;
  s.window = env.history_len;
  s.extra = static_cast<int>(env.num_sensors()) + 1;
  s.filters = sizes.filters;
  s.kernel = sizes.kernel;
  s.hidden = sizes.hidden;
  s.outputs = static_cast<int>(env.num_sensors());
  s.validate();
  return s;
}

NetShape critic_shape(const EnvConfig& env, const NetSizes& sizes) {
  NetShape s = actor_shape(env, sizes);
  s.outputs = 1;
  return s;
}

Network::Network(const NetShape& shape) : shape_(shape) {
  shape_.validate();
  params_.assign(shape_.param_count(), 0.0);
}

bool Network::all_finite() const { return finite_span(params_); }

Gradient& Gradient::operator+=(const Gradient& other) {
  if (!(shape == other.shape)) throw ShapeError("gradient shapes differ");
  for (std::size_t i = 0; i < values.size(); ++i) values[i] += other.values[i];
  return *this;
}

Gradient& Gradient::operator*=(double s) {
  for (double& v : values) v *= s;
  return *this;
}

bool Gradient::all_finite() const { return finite_span(values); }

Features featurize(const Observation& obs, const FeatureScale& scale) {
  Features f;
  f.window.reserve(obs.recent_throughput.size());
  for (double r : obs.recent_throughput) f.window.push_back(r / scale.throughput);
  f.extra.reserve(obs.ages.size() + 1);
  for (double a : obs.ages) f.extra.push_back(a / scale.age_ms);
  f.extra.push_back(obs.last_service_ms / scale.age_ms);
  return f;
}

void forward(const Network& net, const Features& x, ForwardCache& c) {
  const NetShape& s = net.shape();
  check_input(s, x);
  const int F = s.filters, K = s.kernel, P = s.positions(), H = s.hidden, O = s.outputs;
  const int D = s.dense_inputs();
  c.conv_pre.resize(static_cast<std::size_t>(F) * P);
  c.dense_in.resize(static_cast<std::size_t>(D));
  c.hidden_pre.resize(static_cast<std::size_t>(H));
  c.hidden.resize(static_cast<std::size_t>(H));
  c.out.resize(static_cast<std::size_t>(O));

  const auto cw = net.conv_w();
  const auto cb = net.conv_b();
  for (int f = 0; f < F; ++f) {
    for (int p = 0; p < P; ++p) {
      double z = cb[f];
      for (int k = 0; k < K; ++k) z += cw[f * K + k] * x.window[p + k];
      c.conv_pre[f * P + p] = z;
      c.dense_in[f * P + p] = z > 0.0 ? z : 0.0;
    }
  }
  std::copy(x.extra.begin(), x.extra.end(), c.dense_in.begin() + F * P);

  const auto dw = net.dense_w();
  const auto db = net.dense_b();
  const double* in = c.dense_in.data();
  for (int h = 0; h < H; ++h) {
    const double* row = dw.data() + static_cast<std::size_t>(h) * D;
    double z = 0.0;
    for (int i = 0; i < D; ++i) z += row[i] * in[i];
    z += db[h];
    c.hidden_pre[h] = z;
    c.hidden[h] = z > 0.0 ? z : 0.0;
  }

  const auto ow = net.out_w();
  const auto ob = net.out_b();
  for (int o = 0; o < O; ++o) {
    const double* row = ow.data() + static_cast<std::size_t>(o) * H;
    double z = 0.0;
    for (int h = 0; h < H; ++h) z += row[h] * c.hidden[h];
    c.out[o] = z + ob[o];
  }

  if (!finite_span(c.conv_pre) || !finite_span(c.hidden_pre) || !finite_span(c.out))
    throw NumericError("non-finite activation in forward pass");
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.size());
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

double entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs)
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

std::vector<double> forward_actor(const Network& actor, const Features& x) {
  ForwardCache c;
  forward(actor, x, c);
  return softmax(c.out);
}

double forward_critic(const Network& critic, const Features& x) {
  if (critic.shape().outputs != 1) throw ShapeError("critic must have a single output");
  ForwardCache c;
  forward(critic, x, c);
  return c.out[0];
}

void backward(const Network& net, const Features& x, const ForwardCache& c,
              std::span<const double> grad_out, double scale, Gradient& acc) {
  const NetShape& s = net.shape();
  if (!(acc.shape == s)) throw ShapeError("gradient shape does not match network");
  if (static_cast<int>(grad_out.size()) != s.outputs)
    throw ShapeError("output gradient has wrong length");
  const int F = s.filters, K = s.kernel, P = s.positions(), H = s.hidden, O = s.outputs;
  const int D = s.dense_inputs();
  const int C = F * P;

  // Offsets match Network's layout.
  double* g = acc.values.data();
  double* g_cw = g;
  double* g_cb = g_cw + static_cast<std::size_t>(F) * K;
  double* g_dw = g_cb + F;
  double* g_db = g_dw + static_cast<std::size_t>(H) * D;
  double* g_ow = g_db + H;
  double* g_ob = g_ow + static_cast<std::size_t>(O) * H;

  const auto ow = net.out_w();
  std::vector<double> g_hidden(static_cast<std::size_t>(H), 0.0);
  for (int o = 0; o < O; ++o) {
    const double go = scale * grad_out[o];
    if (go == 0.0) continue;
    g_ob[o] += go;
    double* grow = g_ow + static_cast<std::size_t>(o) * H;
    const double* wrow = ow.data() + static_cast<std::size_t>(o) * H;
    for (int h = 0; h < H; ++h) {
      grow[h] += go * c.hidden[h];
      g_hidden[h] += go * wrow[h];
    }
  }
  for (int h = 0; h < H; ++h)
    if (!(c.hidden_pre[h] > 0.0)) g_hidden[h] = 0.0;

  const auto dw = net.dense_w();
  std::vector<double> g_conv(static_cast<std::size_t>(C), 0.0);
  const double* in = c.dense_in.data();
  for (int h = 0; h < H; ++h) {
    const double gh = g_hidden[h];
    if (gh == 0.0) continue;
    g_db[h] += gh;
    double* grow = g_dw + static_cast<std::size_t>(h) * D;
    for (int i = 0; i < D; ++i) grow[i] += gh * in[i];
    const double* wrow = dw.data() + static_cast<std::size_t>(h) * D;
    for (int i = 0; i < C; ++i) g_conv[i] += gh * wrow[i];
  }

  for (int f = 0; f < F; ++f) {
    for (int p = 0; p < P; ++p) {
      if (!(c.conv_pre[f * P + p] > 0.0)) continue;
      const double gz = g_conv[f * P + p];
      g_cb[f] += gz;
      for (int k = 0; k < K; ++k) g_cw[f * K + k] += gz * x.window[p + k];
    }
  }
}

void policy_logit_grad(std::span<const double> probs, int action, double advantage, double beta,
                       std::span<double> out) {
  double h = 0.0;
  for (double p : probs)
    if (p > 0.0) h -= p * std::log(p);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = probs[i];
    const double onehot = static_cast<int>(i) == action ? 1.0 : 0.0;
    double g = advantage * (onehot - p);
    if (beta != 0.0 && p > 0.0) g += beta * (-p * (std::log(p) + h));
    out[i] = g;
  }
}

Gradient grad_log_prob(const Network& actor, const Features& x, int action) {
  const NetShape& s = actor.shape();
  if (action < 0 || action >= s.outputs) throw ShapeError("action out of range");
  ForwardCache c;
  forward(actor, x, c);
  const auto probs = softmax(c.out);
  std::vector<double> go(probs.size());
  policy_logit_grad(probs, action, 1.0, 0.0, go);
  Gradient g(s);
  backward(actor, x, c, go, 1.0, g);
  if (!g.all_finite()) throw NumericError("non-finite log-prob gradient");
  return g;
}

Gradient grad_entropy(const Network& actor, const Features& x) {
  const NetShape& s = actor.shape();
  ForwardCache c;
  forward(actor, x, c);
  const auto probs = softmax(c.out);
  std::vector<double> go(probs.size());
  const double h = entropy(probs);
  for (std::size_t i = 0; i < probs.size(); ++i)
    go[i] = probs[i] > 0.0 ? -probs[i] * (std::log(probs[i]) + h) : 0.0;
  Gradient g(s);
  backward(actor, x, c, go, 1.0, g);
  if (!g.all_finite()) throw NumericError("non-finite entropy gradient");
  return g;
}

Gradient grad_value_sq_err(const Network& critic, const Features& x, double target) {
  if (critic.shape().outputs != 1) throw ShapeError("critic must have a single output");
  if (!std::isfinite(target)) throw NumericError("non-finite value target");
  ForwardCache c;
  forward(critic, x, c);
  const double go = -2.0 * (target - c.out[0]);
  Gradient g(critic.shape());
  backward(critic, x, c, std::span<const double>(&go, 1), 1.0, g);
  if (!g.all_finite()) throw NumericError("non-finite value gradient");
  return g;
}

OptimizerKind parse_optimizer_kind(std::string_view name) {
  if (name == "plain" || name == "sgd") return OptimizerKind::kPlain;
  if (name == "rmsprop") return OptimizerKind::kRmsProp;
  throw ConfigError("unknown optimizer '" + std::string(name) + "'");
}

std::string_view to_string(OptimizerKind kind) {
  return kind == OptimizerKind::kPlain ? "plain" : "rmsprop";
}

void apply_update(Network& net, const Gradient& direction, double lr, Optimizer& opt) {
  if (!(direction.shape == net.shape())) throw ShapeError("update shape does not match network");
  if (!direction.all_finite()) throw NumericError("non-finite update direction");
  auto p = net.params();
  const auto& g = direction.values;
  if (opt.kind == OptimizerKind::kPlain) {
    for (std::size_t i = 0; i < p.size(); ++i) p[i] += lr * g[i];
  } else {
    if (opt.mean_square.size() != p.size()) opt.mean_square.assign(p.size(), 0.0);
    auto& ms = opt.mean_square;
    for (std::size_t i = 0; i < p.size(); ++i) {
      ms[i] = opt.decay * ms[i] + (1.0 - opt.decay) * g[i] * g[i];
      p[i] += lr * g[i] / std::sqrt(ms[i] + opt.epsilon);
    }
  }
  if (!net.all_finite()) throw NumericError("update produced non-finite parameters");
}

void glorot_uniform(std::span<double> w, int fan_in, int fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  for (double& v : w) v = rng.uniform(-bound, bound);
}

Network init_params(const NetShape& shape, std::uint64_t seed) {
  Network net(shape);
  Rng rng(derive_seed(seed, "init"));
  glorot_uniform(net.conv_w(), shape.kernel, shape.filters, rng);
  glorot_uniform(net.dense_w(), shape.dense_inputs(), shape.hidden, rng);
  glorot_uniform(net.out_w(), shape.hidden, shape.outputs, rng);
  return net;
}

}  // namespace aoi
