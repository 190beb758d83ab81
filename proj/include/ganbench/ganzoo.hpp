#pragma once

// Generator/discriminator pairs and the per-variant objectives.
//
// Every objective is written so that the discriminator minimizes
// `d_objective` and the generator minimizes `g_objective`. `value` is the
// quantity the discriminator drives up, reported for inspection.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ganbench/distributions.hpp"
#include "ganbench/matrix.hpp"
#include "ganbench/mlp.hpp"
#include "ganbench/rng.hpp"
#include "ganbench/tape.hpp"
#include "ganbench/variants.hpp"

namespace ganbench {

inline constexpr std::size_t kCodeBins = 12;

/// A loss or update produced a non-finite number.
class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
inline constexpr std::array<std::size_t, 5> kHiddenSizes{32, 64, 128, 256, 512};

struct GanModels {
  std::size_t data_dim = 0;
  std::size_t hidden_dim = 0;
  std::size_t noise_dim = 0;
  MLPSpec g_spec;
  MLPSpec d_spec;
  ParameterStore g_params;
  ParameterStore d_params;
  std::optional<AffineSpec> q_spec;  // InfoGAN code head on D's hidden layer
  ParameterStore q_params;

  bool has_code() const { return q_spec.has_value(); }
  std::size_t g_input_dim() const { return noise_dim + (has_code() ? 1 : 0); }
  std::size_t parameter_count() const {
    std::vector<AffineSpec> aux;
    if (q_spec) aux.push_back(*q_spec);
    return count_params(g_spec, d_spec, aux);
  }
  bool all_finite() const { return g_params.all_finite() && d_params.all_finite() && q_params.all_finite(); }
};

/// Architecture only; no parameter allocation.
inline GanModels model_shapes(VariantKind kind, std::size_t data_dim, std::size_t hidden_dim) {
  if (data_dim < 1) throw std::invalid_argument("model: data dimension must be >= 1");
  if (hidden_dim < 4 || hidden_dim % 4 != 0)
    throw std::invalid_argument("model: hidden size " + std::to_string(hidden_dim) + " is not a positive multiple of 4");
  GanModels m;
  m.data_dim = data_dim;
  m.hidden_dim = hidden_dim;
  m.noise_dim = hidden_dim / 4;
  const bool code = kind == VariantKind::InfoGAN;
  m.g_spec = MLPSpec{m.noise_dim + (code ? 1 : 0), hidden_dim, data_dim, true, OutputActivation::linear};
  m.d_spec = MLPSpec{data_dim, hidden_dim, kind == VariantKind::BEGAN ? data_dim : 1, true, OutputActivation::linear};
  if (code) m.q_spec = AffineSpec{hidden_dim, kCodeBins};
  return m;
}

/// Fresh models of any hidden size divisible by 4.
inline GanModels make_models(VariantKind kind, std::size_t data_dim, std::size_t hidden_dim, std::uint64_t seed) {
  GanModels m = model_shapes(kind, data_dim, hidden_dim);
  m.g_params = init_params(m.g_spec, hash_combine(seed, fnv1a64("generator")));
  m.d_params = init_params(m.d_spec, hash_combine(seed, fnv1a64("discriminator")));
  if (m.q_spec) m.q_params = init_params(*m.q_spec, hash_combine(seed, fnv1a64("code-head")), "code");
  return m;
}

/// Fresh models restricted to the benchmark's hidden sizes.
inline GanModels build_models(const GanVariant& variant, std::size_t data_dim, std::size_t hidden_dim,
                              std::uint64_t seed) {
  if (std::find(kHiddenSizes.begin(), kHiddenSizes.end(), hidden_dim) == kHiddenSizes.end())
    throw std::invalid_argument("build_models: hidden size " + std::to_string(hidden_dim) +
                                " not in {32, 64, 128, 256, 512}");
  variant.validate();
  return make_models(variant.kind, data_dim, hidden_dim, seed);
}

/// Bin of a code value in [-1, 1] among kCodeBins equal bins.
inline std::size_t code_bin(double c) {
  const double u = (c + 1.0) * 0.5 * double(kCodeBins);
  if (!(u > 0.0)) return 0;
  return std::min<std::size_t>(kCodeBins - 1, std::size_t(u));
}

/// Everything random that one objective evaluation consumes.
struct Minibatch {
  Matrix2D real;           // n x d
  Matrix2D noise;          // m x noise_dim
  Matrix2D code;           // m x 1, InfoGAN only
  Matrix2D penalty_noise;  // DRAGAN: n x d standard normals; WGANGP interpolate: n x 1 uniforms
  std::vector<double> data_std;  // per-dimension spread of the training set, DRAGAN only
};

/// Draws the generator-side randomness for `m` fake rows.
inline void draw_generator_inputs(const GanModels& models, std::size_t m, Rng& rng, Minibatch& mb) {
  mb.noise = noise_sample(models.hidden_dim, m, rng);
  if (models.has_code()) {
    mb.code = Matrix2D(m, 1);
    for (auto& x : mb.code.values()) x = rng.uniform(-1.0, 1.0);
  } else {
    mb.code = Matrix2D();
  }
}

/// Draws the penalty randomness for variants that need it.
inline void draw_penalty_inputs(const GanVariant& variant, std::size_t n, std::size_t d, Rng& rng, Minibatch& mb) {
  if (variant.kind == VariantKind::DRAGAN) {
    mb.penalty_noise = Matrix2D(n, d);
    for (auto& x : mb.penalty_noise.values()) x = rng.normal();
  } else if (variant.kind == VariantKind::WGANGP && variant.wgangp_point == PenaltyPoint::interpolate) {
    mb.penalty_noise = Matrix2D(n, 1);
    for (auto& x : mb.penalty_noise.values()) x = rng.uniform();
  } else {
    mb.penalty_noise = Matrix2D();
  }
}

inline Matrix2D generator_input(const GanModels& models, const Matrix2D& noise, const Matrix2D& code) {
  if (noise.cols() != models.noise_dim) throw ShapeError("generator_input: noise has wrong width");
  return models.has_code() ? hconcat(noise, code) : noise;
}

/// Samples `n` rows from the generator.
inline Matrix2D generate(const GanModels& models, std::size_t n, Rng& rng) {
  Minibatch mb;
  draw_generator_inputs(models, n, rng, mb);
  return forward(models.g_spec, models.g_params, generator_input(models, mb.noise, mb.code));
}

/// Discriminator-side quantities a loss needs, already on the tape.
struct LossInputs {
  Var real_out;  // D(x): n x 1, or the reconstruction n x d for BEGAN
  Var fake_out;  // D(G(z))
  Var real_in;   // x, BEGAN only
  Var fake_in;   // G(z), BEGAN only
  std::optional<Var> code_loglik;  // InfoGAN: m x 1 log Q(c | G(z))
};

struct Objectives {
  Var d_objective;
  Var g_objective;
  Var value;
  std::optional<Var> penalty;
  double omega = 0.0;        // FisherGAN second moment
  double began_real = 0.0;   // BEGAN reconstruction losses
  double began_fake = 0.0;
};

namespace detail {
inline void require_finite(const Tape& tape, Var v, const char* what) {
  if (!tape.value(v).all_finite()) throw NonFiniteError(std::string("loss_terms: non-finite ") + what);
}
inline Var log_sigmoid(Var a) { return log(sigmoid(a)); }
inline Var log_one_minus_sigmoid(Var a) { return log(1.0 - sigmoid(a)); }
inline Var mean_l1(Tape& t, Var a, Var b) { return t.mean(t.row_sum(t.abs(t.sub(a, b)))); }
/// log(2) - log(1 + exp(-v)), the Jensen-Shannon output map.
inline Var js_activation(Var v) { return std::log(2.0) - log(1.0 + exp(-v)); }
}  // namespace detail

/// Per-variant objectives from raw discriminator outputs. Penalties are not
/// included here; see `gradient_penalty`.
inline Objectives loss_terms(const GanVariant& variant, const LossInputs& in) {
  Tape& t = *in.real_out.tape;
  detail::require_finite(t, in.real_out, "real discriminator output");
  detail::require_finite(t, in.fake_out, "fake discriminator output");
  const Var rx = in.real_out;
  const Var rg = in.fake_out;
  Objectives o;
  switch (variant.kind) {
    case VariantKind::MMGAN:
    case VariantKind::NSGAN:
    case VariantKind::DRAGAN:
    case VariantKind::InfoGAN: {
      const Var fake_term = mean(detail::log_one_minus_sigmoid(rg));
      o.value = mean(detail::log_sigmoid(rx)) + fake_term;
      o.d_objective = -o.value;
      o.g_objective = variant.kind == VariantKind::NSGAN ? -mean(detail::log_sigmoid(rg)) : fake_term;
      if (variant.kind == VariantKind::InfoGAN) {
        if (!in.code_loglik) throw std::invalid_argument("loss_terms: InfoGAN needs the code log-likelihood");
        const Var info = mean(*in.code_loglik) * variant.info_weight;
        o.d_objective = o.d_objective - info;
        o.g_objective = o.g_objective - info;
      }
      break;
    }
    case VariantKind::WGAN:
    case VariantKind::WGANGP:
      o.value = mean(rg) - mean(rx);
      o.d_objective = -o.value;
      o.g_objective = mean(rg);
      break;
    case VariantKind::FisherGAN: {
      const Var omega = 0.5 * mean(square(rx)) + 0.5 * mean(square(rg));
      o.omega = t.scalar(omega);
      const double lam = variant.fisher.lambda;
      const double rho = variant.fisher.rho;
      o.value = mean(rg) - mean(rx) + (1.0 - omega) * lam - square(omega - 1.0) * (0.5 * rho);
      o.d_objective = -o.value;
      o.g_objective = mean(rg);
      break;
    }
    case VariantKind::LSGAN:
      o.d_objective = mean(square(rx - 1.0)) + mean(square(rg));
      o.value = -o.d_objective;
      o.g_objective = mean(square(rg - 1.0));
      break;
    case VariantKind::BEGAN: {
      const Var lr = detail::mean_l1(t, in.real_in, rx);
      const Var lf = detail::mean_l1(t, in.fake_in, rg);
      o.began_real = t.scalar(lr);
      o.began_fake = t.scalar(lf);
      o.d_objective = lr - lf * variant.began.k;
      o.value = -o.d_objective;
      o.g_objective = lf;
      break;
    }
    case VariantKind::RaGAN: {
      const Var mx = mean(rx);
      const Var mg = mean(rg);
      const Var rel_x = t.add_broadcast(rx, -mg);
      const Var rel_g = t.add_broadcast(rg, -mx);
      o.value = mean(detail::log_sigmoid(rel_x)) + mean(detail::log_one_minus_sigmoid(rel_g));
      o.d_objective = -o.value;
      o.g_objective = -(mean(detail::log_sigmoid(rel_g)) + mean(detail::log_one_minus_sigmoid(rel_x)));
      break;
    }
    case VariantKind::ForwGAN: {
      const Var fake_term = -(mean(exp(rg)) - 1.0);
      o.value = mean(rx) + fake_term;
      o.d_objective = -o.value;
      o.g_objective = fake_term;
      break;
    }
    case VariantKind::RevGAN: {
      const Var fake_term = 1.0 + mean(rg);
      o.value = -mean(exp(rx)) + fake_term;
      o.d_objective = -o.value;
      o.g_objective = fake_term;
      break;
    }
    case VariantKind::HellingerGAN: {
      const Var fake_term = 1.0 - mean(exp(rg));
      o.value = (1.0 - mean(exp(-rx))) + fake_term;
      o.d_objective = -o.value;
      o.g_objective = fake_term;
      break;
    }
    case VariantKind::PearsonGAN: {
      const Var fake_term = -(0.25 * mean(square(rg)) + mean(rg));
      o.value = mean(rx) + fake_term;
      o.d_objective = -o.value;
      o.g_objective = fake_term;
      break;
    }
    case VariantKind::JSGAN: {
      const Var fake_term = mean(log(2.0 - exp(detail::js_activation(rg))));
      o.value = mean(detail::js_activation(rx)) + fake_term;
      o.d_objective = -o.value;
      o.g_objective = fake_term;
      break;
    }
    case VariantKind::TVGAN: {
      const Var fake_term = 0.5 * mean(tanh(rg));
      o.value = fake_term - 0.5 * mean(tanh(rx));
      o.d_objective = -o.value;
      o.g_objective = fake_term;
      break;
    }
  }
  return o;
}

/// Networks bound on one tape.
struct BoundModels {
  std::vector<BoundLayer> g;
  std::vector<BoundLayer> d;
  std::vector<BoundLayer> q;
};

/// lambda * mean((||grad|| - 1)^2) for WGANGP and DRAGAN, differentiable in
/// the bound parameters. `fake` is the generator output for `mb.noise`.
inline Var gradient_penalty(const GanVariant& variant, Tape& tape, const GanModels& models, const BoundModels& net,
                            const Minibatch& mb, const Matrix2D& fake) {
  Var grad;
  if (variant.kind == VariantKind::DRAGAN) {
    const Matrix2D& x = mb.real;
    if (!mb.penalty_noise.same_shape(x) || mb.data_std.size() != x.cols())
      throw ShapeError("gradient_penalty: DRAGAN perturbation has wrong shape");
    Matrix2D points = x;
    for (std::size_t r = 0; r < x.rows(); ++r)
      for (std::size_t c = 0; c < x.cols(); ++c)
        points(r, c) += variant.dragan_noise * mb.data_std[c] * mb.penalty_noise(r, c);
    grad = input_gradient(tape, models.d_spec, net.d, points);
  } else if (variant.kind == VariantKind::WGANGP) {
    if (variant.wgangp_point == PenaltyPoint::literal) {
      const Matrix2D g_in = generator_input(models, mb.noise, mb.code);
      const Var gx = input_gradient(tape, models.d_spec, net.d, fake);
      // chain through the generator: d D(G(z)) / dz
      const Var gz = input_vjp(tape, models.g_spec, net.g, g_in, gx);
      grad = gz;
    } else {
      const Matrix2D& x = mb.real;
      const std::size_t n = std::min(x.rows(), fake.rows());
      if (mb.penalty_noise.rows() < n) throw ShapeError("gradient_penalty: missing interpolation weights");
      Matrix2D points(n, x.cols());
      for (std::size_t r = 0; r < n; ++r) {
        const double u = mb.penalty_noise(r, 0);
        for (std::size_t c = 0; c < x.cols(); ++c) points(r, c) = u * x(r, c) + (1.0 - u) * fake(r, c);
      }
      grad = input_gradient(tape, models.d_spec, net.d, points);
    }
  } else {
    throw std::invalid_argument("gradient_penalty: " + std::string(variant.name()) + " has no gradient penalty");
  }
  return mean(square(tape.row_norm(grad) - 1.0)) * variant.penalty_weight;
}

/// BEGAN controller step; returns the new k.
inline double began_update_k(BeganState& s, double loss_real, double loss_fake) {
  s.k = std::clamp(s.k + s.lambda_k * (s.gamma * loss_real - loss_fake), 0.0, 1.0);
  return s.k;
}

/// FisherGAN multiplier step; returns the new lambda.
inline double fisher_update(FisherState& s, double omega) {
  s.lambda += s.rho * (omega - 1.0);
  return s.lambda;
}

enum class Side { discriminator, generator };

/// Records the full forward pass and objectives for one minibatch. Only the
/// networks of `side` are trainable; the other side enters as constants. The
/// penalty is added to `d_objective` when `side` is the discriminator.
inline Objectives evaluate_objectives(const GanVariant& variant, GanModels& models, const Minibatch& mb, Tape& tape,
                                      Side side, bool train_all = false) {
  if (mb.real.cols() != models.data_dim) throw ShapeError("evaluate_objectives: data width mismatch");
  const bool train_d = train_all || side == Side::discriminator;
  const bool train_g = train_all || side == Side::generator;
  BoundModels net;
  net.g = bind(tape, models.g_params, train_g);
  net.d = bind(tape, models.d_params, train_d);
  if (models.has_code()) net.q = bind(tape, models.q_params, train_d);

  const Matrix2D g_in = generator_input(models, mb.noise, mb.code);
  const ForwardTrace gt = forward(tape, models.g_spec, net.g, tape.constant(g_in));
  const Var x = tape.constant(mb.real);
  const ForwardTrace dr = forward(tape, models.d_spec, net.d, x);
  const ForwardTrace df = forward(tape, models.d_spec, net.d, gt.output);

  LossInputs in{dr.output, df.output, x, gt.output, std::nullopt};
  if (models.has_code()) {
    if (mb.code.rows() != mb.noise.rows()) throw ShapeError("evaluate_objectives: code rows mismatch");
    std::vector<std::size_t> labels(mb.code.rows());
    for (std::size_t r = 0; r < labels.size(); ++r) labels[r] = code_bin(mb.code[r]);
    in.code_loglik = tape.log_softmax_pick(affine(tape, df.hidden, net.q[0]), std::move(labels));
  }
  Objectives o = loss_terms(variant, in);
  if (variant.has_penalty() && (side == Side::discriminator || train_all)) {
    o.penalty = gradient_penalty(variant, tape, models, net, mb, tape.value(gt.output));
    o.d_objective = o.d_objective + *o.penalty;
  }
  return o;
}

}  // namespace ganbench
