#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "ganbench/distributions.hpp"
#include "ganbench/train.hpp"

using namespace ganbench;

namespace {

struct Fixture {
  Matrix2D data, eval;
};

Fixture small_problem(std::size_t n = 200, std::size_t d = 3, std::uint64_t seed = 1) {
  Rng r(seed);
  const auto spec = make_spec(Family::normal, d, r);
  return {sample(spec, n, r), sample(spec, 128, r)};
}

TrainConfig quick(std::size_t epochs = 3, std::size_t batch = 64) {
  TrainConfig c;
  c.hidden_dim = 32;
  c.batch_size = batch;
  c.epochs = epochs;
  c.seed = 99;
  return c;
}

bool same_history(const TrainResult& a, const TrainResult& b) {
  if (a.history.size() != b.history.size()) return false;
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    const auto &x = a.history[i], &y = b.history[i];
    if (x.epoch != y.epoch || !(x.divergence == y.divergence) || x.d_loss != y.d_loss || x.g_loss != y.g_loss)
      return false;
  }
  return true;
}

}  // namespace

TEST(Train, RecordsOnePerEpochNumberedFromOne) {
  const auto f = small_problem();
  const auto r = train(GanVariant::make(VariantKind::NSGAN), f.data, f.eval, quick(4));
  ASSERT_FALSE(r.failed) << r.failure;
  ASSERT_EQ(r.history.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(r.history[i].epoch, i + 1);
    EXPECT_TRUE(r.history[i].divergence.all_finite());
    EXPECT_TRUE(std::isfinite(r.history[i].d_loss));
    EXPECT_TRUE(std::isfinite(r.history[i].g_loss));
  }
}

TEST(Train, ZeroEpochsGivesEmptyHistory) {
  const auto f = small_problem();
  const auto r = train(GanVariant::make(VariantKind::WGAN), f.data, f.eval, quick(0));
  EXPECT_FALSE(r.failed);
  EXPECT_TRUE(r.history.empty());
}

TEST(Train, BitReproducible) {
  const auto f = small_problem();
  for (VariantKind k : {VariantKind::DRAGAN, VariantKind::InfoGAN, VariantKind::BEGAN}) {
    const auto v = GanVariant::make(k);
    const auto a = train(v, f.data, f.eval, quick(2)), b = train(v, f.data, f.eval, quick(2));
    EXPECT_TRUE(same_history(a, b)) << variant_name(k);
  }
  auto other = quick(2);
  other.seed = 100;
  const auto v = GanVariant::make(VariantKind::NSGAN);
  EXPECT_FALSE(same_history(train(v, f.data, f.eval, quick(2)), train(v, f.data, f.eval, other)));
}

TEST(Train, PartialFinalBatchIsStillAStep) {
  const auto f = small_problem(10);
  auto v = GanVariant::make(VariantKind::LSGAN);
  auto models = make_models(v.kind, 3, 32, 4);
  const auto r = train(v, models, f.data, f.eval, quick(5, 4));
  ASSERT_FALSE(r.failed);
  // batches of 4, 4, 2 per epoch
  EXPECT_EQ(models.d_params.step, 15u);
  EXPECT_EQ(models.g_params.step, 15u);
}

TEST(Train, BatchLargerThanDataIsOneFullStep) {
  const auto f = small_problem(50);
  auto v = GanVariant::make(VariantKind::MMGAN);
  auto models = make_models(v.kind, 3, 32, 4);
  train(v, models, f.data, f.eval, quick(3, 1024));
  EXPECT_EQ(models.d_params.step, 3u);
}

TEST(Train, WganWeightsStayClipped) {
  const auto f = small_problem();
  auto v = GanVariant::make(VariantKind::WGAN);
  auto models = make_models(v.kind, 3, 32, 4);
  const auto r = train(v, models, f.data, f.eval, quick(2));
  ASSERT_FALSE(r.failed);
  models.d_params.for_each_parameter([&](double& w, double&) {
    EXPECT_LE(w, v.clip);
    EXPECT_GE(w, -v.clip);
  });
}

TEST(Train, ControllersEvolveAndStayInRange) {
  const auto f = small_problem();
  const auto began = train(GanVariant::make(VariantKind::BEGAN), f.data, f.eval, quick(3));
  ASSERT_FALSE(began.failed);
  EXPECT_GE(began.variant.began.k, 0.0);
  EXPECT_LE(began.variant.began.k, 1.0);
  const auto fisher = train(GanVariant::make(VariantKind::FisherGAN), f.data, f.eval, quick(3));
  ASSERT_FALSE(fisher.failed);
  EXPECT_NE(fisher.variant.fisher.lambda, 0.0);
}

TEST(Train, EveryVariantRunsOnEveryFamily) {
  for (Family fam : kAllFamilies) {
    Rng r(3);
    const auto spec = make_spec(fam, 2, r);
    const auto data = sample(spec, 100, r), eval = sample(spec, 64, r);
    for (VariantKind k : kAllVariants) {
      const auto res = train(GanVariant::make(k), data, eval, quick(1, 50));
      EXPECT_EQ(res.history.size() + (res.failed ? 1 : 0), 1u) << variant_name(k) << " " << family_name(fam);
    }
  }
}

TEST(Train, NonFiniteStateMarksTrialFailed) {
  const auto f = small_problem();
  auto v = GanVariant::make(VariantKind::NSGAN);
  auto models = make_models(v.kind, 3, 32, 4);
  models.g_params.layer("output").bias[0] = std::numeric_limits<double>::quiet_NaN();
  TrainResult r;
  ASSERT_NO_THROW(r = train(v, models, f.data, f.eval, quick(3)));
  EXPECT_TRUE(r.failed);
  EXPECT_FALSE(r.failure.empty());
  EXPECT_TRUE(r.history.empty());
}

TEST(Train, DivergingLearningRateIsContained) {
  Rng r(5);
  Matrix2D data(200, 2);
  for (auto& x : data.values()) x = 1e6 * r.normal();
  TrainConfig c = quick(10);
  c.lr = 1e6;
  const auto res = train(GanVariant::make(VariantKind::HellingerGAN), data, data, c);
  if (res.failed) EXPECT_LT(res.history.size(), 10u);
  else EXPECT_EQ(res.history.size(), 10u);
}

TEST(Train, RejectsBadInputs) {
  const auto f = small_problem();
  auto c = quick();
  c.lr = 0.0;
  EXPECT_THROW(train(GanVariant::make(VariantKind::NSGAN), f.data, f.eval, c), std::invalid_argument);
  EXPECT_THROW(train(GanVariant::make(VariantKind::NSGAN), f.data, Matrix2D(10, 2), quick()), ShapeError);
  c = quick();
  c.hidden_dim = 48;
  EXPECT_THROW(train(GanVariant::make(VariantKind::NSGAN), f.data, f.eval, c), std::invalid_argument);
  c.benchmark_hidden_only = false;
  EXPECT_NO_THROW(train(GanVariant::make(VariantKind::NSGAN), f.data, f.eval, c));
}

TEST(Train, GeneratorMovesTowardShiftedData) {
  // 1-D data far from the generator's initial output; a few epochs of LSGAN
  // must close a large part of the gap in Wasserstein distance.
  Rng r(8);
  Matrix2D data(2000, 1), eval(512, 1);
  for (auto& x : data.values()) x = 4.0 + 0.5 * r.normal();
  for (auto& x : eval.values()) x = 4.0 + 0.5 * r.normal();
  TrainConfig c = quick(30, 128);
  c.lr = 1e-2;
  const auto res = train(GanVariant::make(VariantKind::LSGAN), data, eval, c);
  ASSERT_FALSE(res.failed) << res.failure;
  EXPECT_LT(res.history.back().divergence.wd, 0.5 * res.history.front().divergence.wd);
}
