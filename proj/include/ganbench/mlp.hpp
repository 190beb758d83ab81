#pragma once

// Two-layer perceptrons, their parameter stores, Adam and weight clipping.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ganbench/matrix.hpp"
#include "ganbench/rng.hpp"
#include "ganbench/tape.hpp"

namespace ganbench {

enum class OutputActivation { linear, rectifier };

/// input -> hidden -> output, with an optional rectifier after the hidden layer.
struct MLPSpec {
  std::size_t input_dim = 1;
  std::size_t hidden_dim = 1;
  std::size_t output_dim = 1;
  bool hidden_rectifier = true;
  OutputActivation output_activation = OutputActivation::linear;

  void validate() const {
    if (input_dim < 1 || hidden_dim < 1 || output_dim < 1)
      throw std::invalid_argument("MLPSpec: all dimensions must be >= 1");
  }
  std::size_t parameter_count() const {
    return input_dim * hidden_dim + hidden_dim + hidden_dim * output_dim + output_dim;
  }
  friend bool operator==(const MLPSpec&, const MLPSpec&) = default;
};

/// A single affine map, used for auxiliary heads.
struct AffineSpec {
  std::size_t input_dim = 1;
  std::size_t output_dim = 1;
  std::size_t parameter_count() const { return input_dim * output_dim + output_dim; }
};

struct Layer {
  std::string name;
  Matrix2D weight;  // fan_in x fan_out
  Matrix2D bias;    // 1 x fan_out
  Matrix2D grad_weight;
  Matrix2D grad_bias;
  Matrix2D m_weight, v_weight;
  Matrix2D m_bias, v_bias;

  Layer() = default;
  Layer(std::string n, std::size_t fan_in, std::size_t fan_out)
      : name(std::move(n)),
        weight(fan_in, fan_out),
        bias(1, fan_out),
        grad_weight(fan_in, fan_out),
        grad_bias(1, fan_out),
        m_weight(fan_in, fan_out),
        v_weight(fan_in, fan_out),
        m_bias(1, fan_out),
        v_bias(1, fan_out) {}

  friend bool operator==(const Layer&, const Layer&) = default;
};

/// Named layers plus the Adam step counter.
struct ParameterStore {
  std::vector<Layer> layers;
  std::uint64_t step = 0;

  Layer& layer(std::string_view name) {
    for (auto& l : layers)
      if (l.name == name) return l;
    throw std::out_of_range("ParameterStore: no layer " + std::string(name));
  }
  const Layer& layer(std::string_view name) const { return const_cast<ParameterStore*>(this)->layer(name); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weight.size() + l.bias.size();
    return n;
  }

  void zero_grad() {
    for (auto& l : layers) {
      l.grad_weight.fill(0.0);
      l.grad_bias.fill(0.0);
    }
  }

  bool all_finite() const {
    return std::all_of(layers.begin(), layers.end(),
                       [](const Layer& l) { return l.weight.all_finite() && l.bias.all_finite(); });
  }

  /// Visits (value, gradient) pairs of every trainable entry in a fixed order.
  template <class F>
  void for_each_parameter(F&& f) {
    for (auto& l : layers) {
      for (std::size_t i = 0; i < l.weight.size(); ++i) f(l.weight[i], l.grad_weight[i]);
      for (std::size_t i = 0; i < l.bias.size(); ++i) f(l.bias[i], l.grad_bias[i]);
    }
  }

  friend bool operator==(const ParameterStore&, const ParameterStore&) = default;
};

namespace detail {
inline void glorot_fill(Matrix2D& w, Rng& rng) {
  const double s = std::sqrt(6.0 / double(w.rows() + w.cols()));
  for (auto& x : w.values()) x = rng.uniform(-s, s);
}
}  // namespace detail

/// Glorot-uniform weights, zero biases. Deterministic in (spec, seed).
inline ParameterStore init_params(const MLPSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng = Rng(seed).split("init");
  ParameterStore store;
  store.layers.emplace_back("hidden", spec.input_dim, spec.hidden_dim);
  store.layers.emplace_back("output", spec.hidden_dim, spec.output_dim);
  for (auto& l : store.layers) detail::glorot_fill(l.weight, rng);
  return store;
}

inline ParameterStore init_params(const AffineSpec& spec, std::uint64_t seed, std::string name = "head") {
  Rng rng = Rng(seed).split("init");
  ParameterStore store;
  store.layers.emplace_back(std::move(name), spec.input_dim, spec.output_dim);
  detail::glorot_fill(store.layers[0].weight, rng);
  return store;
}

/// Total trainable parameters of a generator, discriminator and auxiliary heads.
inline std::size_t count_params(const MLPSpec& g_spec, const MLPSpec& d_spec,
                                const std::vector<AffineSpec>& aux_specs = {}) {
  std::size_t n = g_spec.parameter_count() + d_spec.parameter_count();
  for (const auto& a : aux_specs) n += a.parameter_count();
  return n;
}

/// Tape handles for one layer's weight and bias.
struct BoundLayer {
  Var weight;
  Var bias;
};

/// Puts a store's layers on a tape. Trainable layers accumulate gradients into
/// the store; frozen ones enter as constants.
inline std::vector<BoundLayer> bind(Tape& tape, ParameterStore& store, bool trainable) {
  std::vector<BoundLayer> out;
  out.reserve(store.layers.size());
  for (auto& l : store.layers) {
    if (trainable)
      out.push_back({tape.parameter(l.weight, &l.grad_weight), tape.parameter(l.bias, &l.grad_bias)});
    else
      out.push_back({tape.constant(l.weight), tape.constant(l.bias)});
  }
  return out;
}

inline Var affine(Tape& tape, Var x, const BoundLayer& layer) {
  return tape.add_row(tape.matmul(x, layer.weight), layer.bias);
}

struct ForwardTrace {
  Var hidden_pre;
  Var hidden;
  Var output;
};

/// Records the two-layer forward pass on `tape`.
inline ForwardTrace forward(Tape& tape, const MLPSpec& spec, const std::vector<BoundLayer>& net, Var input) {
  if (tape.value(input).cols() != spec.input_dim)
    throw ShapeError("forward: input has " + std::to_string(tape.value(input).cols()) + " columns, expected " +
                     std::to_string(spec.input_dim));
  ForwardTrace tr;
  tr.hidden_pre = affine(tape, input, net[0]);
  tr.hidden = spec.hidden_rectifier ? tape.relu(tr.hidden_pre) : tr.hidden_pre;
  tr.output = affine(tape, tr.hidden, net[1]);
  if (spec.output_activation == OutputActivation::rectifier) tr.output = tape.relu(tr.output);
  return tr;
}

/// Tape-free evaluation; identical arithmetic to `forward`.
inline Matrix2D forward(const MLPSpec& spec, const ParameterStore& params, const Matrix2D& input) {
  if (input.cols() != spec.input_dim) throw ShapeError("forward: input column mismatch");
  const auto& l1 = params.layers[0];
  const auto& l2 = params.layers[1];
  Matrix2D h = matmul(input, l1.weight);
  for (std::size_t r = 0; r < h.rows(); ++r)
    for (std::size_t c = 0; c < h.cols(); ++c) {
      double v = h(r, c) + l1.bias[c];
      h(r, c) = (spec.hidden_rectifier && !(v > 0.0)) ? 0.0 : v;
    }
  Matrix2D out = matmul(h, l2.weight);
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) {
      double v = out(r, c) + l2.bias[c];
      out(r, c) = (spec.output_activation == OutputActivation::rectifier && !(v > 0.0)) ? 0.0 : v;
    }
  return out;
}

namespace detail {
/// 1 where the rectifier passes (or everywhere when the rectifier is off).
inline Matrix2D activation_mask(const Matrix2D& pre, bool rectifier) {
  Matrix2D m(pre.rows(), pre.cols(), 1.0);
  if (rectifier)
    for (std::size_t i = 0; i < pre.size(); ++i) m[i] = pre[i] > 0.0 ? 1.0 : 0.0;
  return m;
}
inline Matrix2D add_bias(Matrix2D m, const Matrix2D& bias) {
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) += bias[c];
  return m;
}
}  // namespace detail

/// Vector-Jacobian product of the network at fixed inputs `x`: maps an
/// upstream gradient on the outputs (n x output_dim) to the inputs
/// (n x input_dim). The rectifier masks are frozen at `x`, so the result is
/// exact for the piecewise-linear network and stays differentiable in the
/// weights and in `upstream`.
inline Var input_vjp(Tape& tape, const MLPSpec& spec, const std::vector<BoundLayer>& net, const Matrix2D& x,
                     Var upstream) {
  if (x.cols() != spec.input_dim) throw ShapeError("input_vjp: input column mismatch");
  const Matrix2D pre1 = detail::add_bias(matmul(x, tape.value(net[0].weight)), tape.value(net[0].bias));
  const Matrix2D mask1 = detail::activation_mask(pre1, spec.hidden_rectifier);
  tape.record_kinks(mask1);
  Var g = upstream;
  if (spec.output_activation == OutputActivation::rectifier) {
    Matrix2D h = pre1;
    for (std::size_t i = 0; i < h.size(); ++i) h[i] *= mask1[i];
    const Matrix2D pre2 = detail::add_bias(matmul(h, tape.value(net[1].weight)), tape.value(net[1].bias));
    const Matrix2D mask2 = detail::activation_mask(pre2, true);
    tape.record_kinks(mask2);
    g = tape.mul(g, tape.constant(mask2));
  }
  Var gh = tape.mul(tape.matmul(g, tape.transpose(net[1].weight)), tape.constant(mask1));
  return tape.matmul(gh, tape.transpose(net[0].weight));
}

/// Per-row gradient of a scalar-output network with respect to its input, as
/// a differentiable tape node.
inline Var input_gradient(Tape& tape, const MLPSpec& spec, const std::vector<BoundLayer>& net, const Matrix2D& x) {
  if (spec.output_dim != 1)
    throw std::invalid_argument("input_gradient: network output is not scalar (output_dim = " +
                                std::to_string(spec.output_dim) + ")");
  return input_vjp(tape, spec, net, x, tape.constant(Matrix2D(x.rows(), 1, 1.0)));
}

/// Closed-form value of `input_gradient`.
inline Matrix2D input_gradient(const MLPSpec& spec, ParameterStore& params, const Matrix2D& x) {
  Tape tape;
  auto net = bind(tape, params, false);
  return tape.value(input_gradient(tape, spec, net, x));
}

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One bias-corrected Adam update from the accumulated gradients, which are
/// then cleared.
inline void adam_step(ParameterStore& params, double lr, const AdamConfig& cfg = {}) {
  params.step += 1;
  const double t = double(params.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  auto update = [&](Matrix2D& w, Matrix2D& g, Matrix2D& m, Matrix2D& v) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      w[i] -= lr * mhat / (std::sqrt(vhat) + cfg.epsilon);
      g[i] = 0.0;
    }
  };
  for (auto& l : params.layers) {
    update(l.weight, l.grad_weight, l.m_weight, l.v_weight);
    update(l.bias, l.grad_bias, l.m_bias, l.v_bias);
  }
}

/// Clamps every weight and bias to [-c, c].
inline void clip_weights(ParameterStore& params, double c) {
  if (!(c > 0.0)) throw std::invalid_argument("clip_weights: c must be positive");
  for (auto& l : params.layers) {
    for (auto& x : l.weight.values()) x = std::clamp(x, -c, c);
    for (auto& x : l.bias.values()) x = std::clamp(x, -c, c);
  }
}

}  // namespace ganbench
