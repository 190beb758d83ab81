#pragma once

// Reverse-mode autodiff over dense matrices. Every primitive appends a node
// holding its forward value and a closure that scatters the node's gradient
// into its inputs; `backward` replays the closures in reverse order.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ganbench/matrix.hpp"

namespace ganbench {

class Tape;

/// Handle to a node on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;
};

namespace numeric {
inline constexpr double kLogFloor = 1e-12;
inline constexpr double kExpClamp = 30.0;

inline double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}
}  // namespace numeric

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  std::size_t size() const { return nodes_.size(); }
  const Matrix2D& value(Var v) const { return nodes_[v.id].value; }
  double scalar(Var v) const {
    const auto& m = nodes_[v.id].value;
    if (m.size() != 1) throw ShapeError("scalar: node is " + m.shape_string());
    return m[0];
  }

  /// Sign pattern of every non-differentiable point touched so far (rectifier
  /// inputs, abs inputs, clamped log/exp arguments, constant masks). Two
  /// evaluations with equal signatures lie on the same smooth piece.
  const std::vector<std::uint8_t>& kink_signature() const { return kinks_; }
  std::size_t exp_clamp_events() const { return exp_clamps_; }

  void record_kinks(const Matrix2D& mask) {
    for (double v : mask.values()) kinks_.push_back(v > 0.0);
  }

  Var constant(Matrix2D v) { return push(std::move(v), nullptr); }

  /// Leaf whose gradient is added into `*grad_sink` by backward (if non-null).
  Var parameter(const Matrix2D& v, Matrix2D* grad_sink) {
    Var out = push(v, nullptr);
    nodes_[out.id].sink = grad_sink;
    return out;
  }

  Var add(Var a, Var b) {
    check_same(a, b, "add");
    Matrix2D v = value(a);
    const auto& bv = value(b);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += bv[i];
    return push(std::move(v), [a, b](Tape& t, std::size_t self) {
      t.accumulate(a.id, t.grad(self));
      t.accumulate(b.id, t.grad(self));
    });
  }

  Var sub(Var a, Var b) {
    check_same(a, b, "sub");
    Matrix2D v = value(a);
    const auto& bv = value(b);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= bv[i];
    return push(std::move(v), [a, b](Tape& t, std::size_t self) {
      t.accumulate(a.id, t.grad(self));
      t.accumulate(b.id, t.grad(self), -1.0);
    });
  }

  /// Elementwise product.
  Var mul(Var a, Var b) {
    check_same(a, b, "mul");
    Matrix2D v = value(a);
    const auto& bv = value(b);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] *= bv[i];
    return push(std::move(v), [a, b](Tape& t, std::size_t self) {
      const auto& g = t.grad(self);
      auto& ga = t.grad_buffer(a.id);
      auto& gb = t.grad_buffer(b.id);
      const auto& av = t.value(a);
      const auto& bv = t.value(b);
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga[i] += g[i] * bv[i];
        gb[i] += g[i] * av[i];
      }
    });
  }

  Var scale(Var a, double s) {
    Matrix2D v = value(a);
    for (auto& x : v.values()) x *= s;
    return push(std::move(v), [a, s](Tape& t, std::size_t self) { t.accumulate(a.id, t.grad(self), s); });
  }

  Var shift(Var a, double s) {
    Matrix2D v = value(a);
    for (auto& x : v.values()) x += s;
    return push(std::move(v), [a](Tape& t, std::size_t self) { t.accumulate(a.id, t.grad(self)); });
  }

  /// a + s where s is a 1x1 node broadcast over every entry.
  Var add_broadcast(Var a, Var s) {
    if (value(s).size() != 1) throw ShapeError("add_broadcast: operand is not scalar");
    Matrix2D v = value(a);
    const double sv = value(s)[0];
    for (auto& x : v.values()) x += sv;
    return push(std::move(v), [a, s](Tape& t, std::size_t self) {
      const auto& g = t.grad(self);
      t.accumulate(a.id, g);
      double total = 0.0;
      for (double x : g.values()) total += x;
      t.grad_buffer(s.id)[0] += total;
    });
  }

  /// a + 1*row, row is 1 x a.cols.
  Var add_row(Var a, Var row) {
    const auto& av = value(a);
    const auto& rv = value(row);
    if (rv.rows() != 1 || rv.cols() != av.cols())
      throw ShapeError("add_row: " + av.shape_string() + " + " + rv.shape_string());
    Matrix2D v = av;
    for (std::size_t r = 0; r < v.rows(); ++r)
      for (std::size_t c = 0; c < v.cols(); ++c) v(r, c) += rv[c];
    return push(std::move(v), [a, row](Tape& t, std::size_t self) {
      const auto& g = t.grad(self);
      t.accumulate(a.id, g);
      auto& gr = t.grad_buffer(row.id);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) gr[c] += g(r, c);
    });
  }

  /// a (.) 1*row, row is 1 x a.cols.
  Var mul_row(Var a, Var row) {
    const auto& av = value(a);
    const auto& rv = value(row);
    if (rv.rows() != 1 || rv.cols() != av.cols())
      throw ShapeError("mul_row: " + av.shape_string() + " * " + rv.shape_string());
    Matrix2D v = av;
    for (std::size_t r = 0; r < v.rows(); ++r)
      for (std::size_t c = 0; c < v.cols(); ++c) v(r, c) *= rv[c];
    return push(std::move(v), [a, row](Tape& t, std::size_t self) {
      const auto& g = t.grad(self);
      const auto& av = t.value(a);
      const auto& rv = t.value(row);
      auto& ga = t.grad_buffer(a.id);
      auto& gr = t.grad_buffer(row.id);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) {
          ga(r, c) += g(r, c) * rv[c];
          gr[c] += g(r, c) * av(r, c);
        }
    });
  }

  Var matmul(Var a, Var b) {
    Matrix2D v = ganbench::matmul(value(a), value(b));
    return push(std::move(v), [a, b](Tape& t, std::size_t self) {
      const auto& g = t.grad(self);
      t.accumulate(a.id, matmul_bt(g, t.value(b)));
      t.accumulate(b.id, matmul_at(t.value(a), g));
    });
  }

  Var transpose(Var a) {
    return push(ganbench::transpose(value(a)), [a](Tape& t, std::size_t self) {
      t.accumulate(a.id, ganbench::transpose(t.grad(self)));
    });
  }

  Var relu(Var a) {
    const auto& av = value(a);
    Matrix2D v = av;
    for (auto& x : v.values()) {
      kinks_.push_back(x > 0.0);
      if (!(x > 0.0)) x = 0.0;
    }
    return push(std::move(v), [a](Tape& t, std::size_t self) {
      const auto& g = t.grad(self);
      const auto& av = t.value(a);
      auto& ga = t.grad_buffer(a.id);
      for (std::size_t i = 0; i < g.size(); ++i)
        if (av[i] > 0.0) ga[i] += g[i];
    });
  }

  Var sigmoid(Var a) {
    Matrix2D v = value(a);
    for (auto& x : v.values()) x = numeric::stable_sigmoid(x);
    return push(std::move(v), [a](Tape& t, std::size_t self) {
      const auto& g = t.grad(self);
      const auto& s = t.nodes_[self].value;
      auto& ga = t.grad_buffer(a.id);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * s[i] * (1.0 - s[i]);
    });
  }

  Var tanh(Var a) {
    Matrix2D v = value(a);
    for (auto& x : v.values()) x = std::tanh(x);
    return push(std::move(v), [a](Tape& t, std::size_t self) {
      const auto& g = t.grad(self);
      const auto& s = t.nodes_[self].value;
      auto& ga = t.grad_buffer(a.id);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - s[i] * s[i]);
    });
  }

  /// exp with the argument clamped to [-30, 30]; clamped entries get zero gradient.
  Var exp(Var a) {
    Matrix2D v = value(a);
    for (auto& x : v.values()) {
      const bool inside = std::abs(x) <= numeric::kExpClamp;
      kinks_.push_back(inside);
      if (!inside) ++exp_clamps_;
      x = std::exp(std::clamp(x, -numeric::kExpClamp, numeric::kExpClamp));
    }
    return push(std::move(v), [a](Tape& t, std::size_t self) {
      const auto& g = t.grad(self);
      const auto& av = t.value(a);
      const auto& s = t.nodes_[self].value;
      auto& ga = t.grad_buffer(a.id);
      for (std::size_t i = 0; i < g.size(); ++i)
        if (std::abs(av[i]) <= numeric::kExpClamp) ga[i] += g[i] * s[i];
    });
  }

  /// log(max(a, 1e-12)); floored entries get zero gradient.
  Var log(Var a) {
    Matrix2D v = value(a);
    for (auto& x : v.values()) {
      kinks_.push_back(x >= numeric::kLogFloor);
      x = std::log(std::max(x, numeric::kLogFloor));
    }
    return push(std::move(v), [a](Tape& t, std::size_t self) {
      const auto& g = t.grad(self);
      const auto& av = t.value(a);
      auto& ga = t.grad_buffer(a.id);
      for (std::size_t i = 0; i < g.size(); ++i)
        if (av[i] >= numeric::kLogFloor) ga[i] += g[i] / av[i];
    });
  }

  Var pow(Var a, double p) {
    Matrix2D v = value(a);
    for (auto& x : v.values()) x = p == 2.0 ? x * x : std::pow(x, p);
    return push(std::move(v), [a, p](Tape& t, std::size_t self) {
      const auto& g = t.grad(self);
      const auto& av = t.value(a);
      auto& ga = t.grad_buffer(a.id);
      for (std::size_t i = 0; i < g.size(); ++i)
        ga[i] += g[i] * (p == 2.0 ? 2.0 * av[i] : p * std::pow(av[i], p - 1.0));
    });
  }

  Var square(Var a) { return pow(a, 2.0); }

  Var abs(Var a) {
    Matrix2D v = value(a);
    for (auto& x : v.values()) {
      kinks_.push_back(x >= 0.0);
      x = std::abs(x);
    }
    return push(std::move(v), [a](Tape& t, std::size_t self) {
      const auto& g = t.grad(self);
      const auto& av = t.value(a);
      auto& ga = t.grad_buffer(a.id);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += av[i] > 0.0 ? g[i] : (av[i] < 0.0 ? -g[i] : 0.0);
    });
  }

  /// Sum of all entries as a 1x1 node.
  Var sum(Var a) {
    double s = 0.0;
    for (double x : value(a).values()) s += x;
    return push(Matrix2D::scalar(s), [a](Tape& t, std::size_t self) {
      const double g = t.grad(self)[0];
      for (auto& x : t.grad_buffer(a.id).values()) x += g;
    });
  }

  /// Mean of all entries as a 1x1 node.
  Var mean(Var a) {
    const double n = double(value(a).size());
    if (n == 0) throw ShapeError("mean: empty operand");
    return scale(sum(a), 1.0 / n);
  }

  /// Per-row sum, n x 1.
  Var row_sum(Var a) {
    const auto& av = value(a);
    Matrix2D v(av.rows(), 1);
    for (std::size_t r = 0; r < av.rows(); ++r)
      for (double x : av.row(r)) v[r] += x;
    return push(std::move(v), [a](Tape& t, std::size_t self) {
      const auto& g = t.grad(self);
      auto& ga = t.grad_buffer(a.id);
      for (std::size_t r = 0; r < ga.rows(); ++r)
        for (auto& x : ga.row(r)) x += g[r];
    });
  }

  /// Per-row Euclidean norm, n x 1. Zero rows get zero gradient.
  Var row_norm(Var a) {
    const auto& av = value(a);
    Matrix2D v(av.rows(), 1);
    for (std::size_t r = 0; r < av.rows(); ++r) {
      double s = 0.0;
      for (double x : av.row(r)) s += x * x;
      v[r] = std::sqrt(s);
    }
    return push(std::move(v), [a](Tape& t, std::size_t self) {
      const auto& g = t.grad(self);
      const auto& av = t.value(a);
      const auto& nv = t.nodes_[self].value;
      auto& ga = t.grad_buffer(a.id);
      for (std::size_t r = 0; r < av.rows(); ++r) {
        if (nv[r] == 0.0) continue;
        const double k = g[r] / nv[r];
        for (std::size_t c = 0; c < av.cols(); ++c) ga(r, c) += k * av(r, c);
      }
    });
  }

  /// For each row r, log softmax(a[r, :])[labels[r]], as n x 1.
  Var log_softmax_pick(Var a, std::vector<std::size_t> labels) {
    const auto& av = value(a);
    if (labels.size() != av.rows()) throw ShapeError("log_softmax_pick: label count != rows");
    Matrix2D v(av.rows(), 1);
    Matrix2D probs(av.rows(), av.cols());
    for (std::size_t r = 0; r < av.rows(); ++r) {
      if (labels[r] >= av.cols()) throw ShapeError("log_softmax_pick: label out of range");
      double mx = av(r, 0);
      for (double x : av.row(r)) mx = std::max(mx, x);
      double z = 0.0;
      for (double x : av.row(r)) z += std::exp(x - mx);
      const double lse = mx + std::log(z);
      for (std::size_t c = 0; c < av.cols(); ++c) probs(r, c) = std::exp(av(r, c) - lse);
      v[r] = av(r, labels[r]) - lse;
    }
    return push(std::move(v), [a, labels = std::move(labels), probs = std::move(probs)](Tape& t, std::size_t self) {
      const auto& g = t.grad(self);
      auto& ga = t.grad_buffer(a.id);
      for (std::size_t r = 0; r < ga.rows(); ++r) {
        for (std::size_t c = 0; c < ga.cols(); ++c) ga(r, c) -= g[r] * probs(r, c);
        ga(r, labels[r]) += g[r];
      }
    });
  }

  /// Reverse sweep from a 1x1 node. Gradients land in parameter sinks; the
  /// tape is cleared afterwards.
  void backward(Var loss) {
    if (loss.tape != this) throw std::invalid_argument("backward: node from another tape");
    if (nodes_[loss.id].value.size() != 1)
      throw ShapeError("backward: loss is " + nodes_[loss.id].value.shape_string() + ", expected scalar");
    grad_buffer(loss.id)[0] = 1.0;
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (n.grad.empty()) continue;
      if (n.back) n.back(*this, i);
      if (n.sink) {
        if (!n.sink->same_shape(n.grad)) throw ShapeError("backward: gradient sink shape mismatch");
        for (std::size_t k = 0; k < n.grad.size(); ++k) (*n.sink)[k] += n.grad[k];
      }
    }
    clear();
  }

  void clear() {
    nodes_.clear();
    kinks_.clear();
  }

 private:
  using Backward = std::function<void(Tape&, std::size_t)>;
  struct Node {
    Matrix2D value;
    Matrix2D grad;
    Backward back;
    Matrix2D* sink = nullptr;
  };

  Var push(Matrix2D v, Backward back) {
    nodes_.push_back(Node{std::move(v), {}, std::move(back), nullptr});
    return Var{this, nodes_.size() - 1};
  }

  void check_same(Var a, Var b, const char* op) const {
    if (!value(a).same_shape(value(b)))
      throw ShapeError(std::string(op) + ": " + value(a).shape_string() + " vs " + value(b).shape_string());
  }

  const Matrix2D& grad(std::size_t id) const { return nodes_[id].grad; }

  Matrix2D& grad_buffer(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) n.grad = Matrix2D(n.value.rows(), n.value.cols());
    return n.grad;
  }

  void accumulate(std::size_t id, const Matrix2D& g, double s = 1.0) {
    auto& dst = grad_buffer(id);
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += s * g[i];
  }

  std::vector<Node> nodes_;
  std::vector<std::uint8_t> kinks_;
  std::size_t exp_clamps_ = 0;
};

inline Var operator+(Var a, Var b) { return a.tape->add(a, b); }
inline Var operator-(Var a, Var b) { return a.tape->sub(a, b); }
inline Var operator*(Var a, Var b) { return a.tape->mul(a, b); }
inline Var operator*(Var a, double s) { return a.tape->scale(a, s); }
inline Var operator*(double s, Var a) { return a.tape->scale(a, s); }
inline Var operator+(Var a, double s) { return a.tape->shift(a, s); }
inline Var operator+(double s, Var a) { return a.tape->shift(a, s); }
inline Var operator-(Var a, double s) { return a.tape->shift(a, -s); }
inline Var operator-(double s, Var a) { return a.tape->shift(a.tape->scale(a, -1.0), s); }
inline Var operator-(Var a) { return a.tape->scale(a, -1.0); }

inline Var exp(Var a) { return a.tape->exp(a); }
inline Var log(Var a) { return a.tape->log(a); }
inline Var tanh(Var a) { return a.tape->tanh(a); }
inline Var sigmoid(Var a) { return a.tape->sigmoid(a); }
inline Var square(Var a) { return a.tape->square(a); }
inline Var mean(Var a) { return a.tape->mean(a); }

}  // namespace ganbench
