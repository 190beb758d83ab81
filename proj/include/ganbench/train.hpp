#pragma once

// Alternating minibatch training with per-epoch divergence tracking.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "ganbench/ganzoo.hpp"
#include "ganbench/metrics.hpp"

namespace ganbench {

struct TrainConfig {
  double lr = 2e-3;
  std::size_t hidden_dim = 64;
  std::size_t batch_size = 1024;
  std::size_t epochs = 25;  // 0 is allowed and yields an empty history
  std::uint64_t seed = 0;
  bool benchmark_hidden_only = true;  // restrict hidden_dim to the grid sizes

  void validate() const {
    if (!(lr > 0.0) || !std::isfinite(lr)) throw std::invalid_argument("TrainConfig: lr must be positive");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch size must be >= 1");
  }
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  DivergenceReport divergence;
  double d_loss = 0.0;
  double g_loss = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  bool failed = false;
  std::string failure;
  std::size_t exp_clamp_events = 0;
  GanVariant variant;  // with final controller state
};

/// Random streams of one training run, all split from the run seed.
struct TrainStreams {
  Rng shuffle, noise, penalty, eval;
  explicit TrainStreams(std::uint64_t seed)
      : shuffle(Rng(seed).split("shuffle")),
        noise(Rng(seed).split("noise")),
        penalty(Rng(seed).split("penalty")),
        eval(Rng(seed).split("eval")) {}
};

namespace detail {
inline void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
}
}  // namespace detail

/// One discriminator update. Returns the discriminator objective.
inline double discriminator_step(GanVariant& variant, GanModels& models, const Minibatch& mb, double lr,
                                 std::size_t& clamp_events) {
  Tape tape;
  const Objectives o = evaluate_objectives(variant, models, mb, tape, Side::discriminator);
  const double loss = tape.scalar(o.d_objective);
  clamp_events += tape.exp_clamp_events();
  if (!std::isfinite(loss)) throw NonFiniteError("non-finite discriminator objective");
  tape.backward(o.d_objective);
  adam_step(models.d_params, lr);
  if (models.has_code()) adam_step(models.q_params, lr);
  if (variant.kind == VariantKind::WGAN) clip_weights(models.d_params, variant.clip);
  if (variant.kind == VariantKind::FisherGAN) fisher_update(variant.fisher, o.omega);
  if (variant.kind == VariantKind::BEGAN) began_update_k(variant.began, o.began_real, o.began_fake);
  return loss;
}

/// One generator update against a frozen discriminator.
inline double generator_step(const GanVariant& variant, GanModels& models, const Minibatch& mb, double lr,
                             std::size_t& clamp_events) {
  Tape tape;
  const Objectives o = evaluate_objectives(variant, models, mb, tape, Side::generator);
  const double loss = tape.scalar(o.g_objective);
  clamp_events += tape.exp_clamp_events();
  if (!std::isfinite(loss)) throw NonFiniteError("non-finite generator objective");
  tape.backward(o.g_objective);
  adam_step(models.g_params, lr);
  return loss;
}

/// Trains `models` in place on `data`. Each epoch shuffles the data and walks
/// it in minibatches of min(batch_size, n), the last one possibly partial.
/// Each minibatch takes one discriminator step then one generator step with
/// fresh noise. After every epoch the generator is scored against `eval_real`.
/// Any non-finite quantity ends the run with `failed` set.
inline TrainResult train(GanVariant variant, GanModels& models, const Matrix2D& data, const Matrix2D& eval_real,
                         const TrainConfig& cfg) {
  cfg.validate();
  variant.validate();
  if (data.rows() < 1 || data.cols() != models.data_dim)
    throw ShapeError("train: data is " + data.shape_string() + ", model expects " + std::to_string(models.data_dim) +
                     " columns");
  if (eval_real.cols() != models.data_dim) throw ShapeError("train: evaluation batch width mismatch");

  TrainStreams streams(cfg.seed);
  TrainResult result;
  const std::size_t n = data.rows();
  const std::size_t b = std::min(cfg.batch_size, n);
  const std::vector<double> data_sd = column_stddevs(data);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  try {
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
      detail::shuffle_indices(order, streams.shuffle);
      double d_sum = 0.0, g_sum = 0.0;
      std::size_t steps = 0;
      for (std::size_t start = 0; start < n; start += b) {
        const std::size_t end = std::min(n, start + b);
        const std::span<const std::size_t> rows(order.data() + start, end - start);
        Minibatch mb;
        mb.real = gather_rows(data, rows);
        mb.data_std = data_sd;
        const std::size_t m = mb.real.rows();
        draw_generator_inputs(models, m, streams.noise, mb);
        draw_penalty_inputs(variant, m, models.data_dim, streams.penalty, mb);
        d_sum += discriminator_step(variant, models, mb, cfg.lr, result.exp_clamp_events);

        draw_generator_inputs(models, m, streams.noise, mb);
        g_sum += generator_step(variant, models, mb, cfg.lr, result.exp_clamp_events);
        ++steps;
        if (!models.all_finite()) throw NonFiniteError("non-finite parameters");
      }
      EpochRecord rec;
      rec.epoch = epoch;
      rec.d_loss = d_sum / double(steps);
      rec.g_loss = g_sum / double(steps);
      const Matrix2D fake = generate(models, eval_real.rows(), streams.eval);
      if (!fake.all_finite()) throw NonFiniteError("non-finite generator samples");
      rec.divergence = divergence_report(eval_real, fake);
      result.history.push_back(rec);
    }
  } catch (const NonFiniteError& e) {
    result.failed = true;
    result.failure = e.what();
  }
  result.variant = variant;
  return result;
}

/// Builds benchmark models from the run seed and trains them.
inline TrainResult train(const GanVariant& variant, const Matrix2D& data, const Matrix2D& eval_real,
                         const TrainConfig& cfg) {
  const std::uint64_t init_seed = Rng(cfg.seed).split("init").next_u64();
  GanModels models = cfg.benchmark_hidden_only ? build_models(variant, data.cols(), cfg.hidden_dim, init_seed)
                                               : make_models(variant.kind, data.cols(), cfg.hidden_dim, init_seed);
  return train(variant, models, data, eval_real, cfg);
}

}  // namespace ganbench
