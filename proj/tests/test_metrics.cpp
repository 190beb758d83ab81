#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "ganbench/distributions.hpp"
#include "ganbench/metrics.hpp"

using namespace ganbench;

namespace {

Histogram1D hist(std::vector<double> masses) {
  Histogram1D h;
  for (std::size_t i = 0; i <= masses.size(); ++i) h.edges.push_back(double(i));
  h.masses = std::move(masses);
  return h;
}

Matrix2D normal_batch(std::size_t n, std::size_t d, Rng& rng, double shift_last = 0.0) {
  Matrix2D m(n, d);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) m(r, c) = rng.normal() + (c + 1 == d ? shift_last : 0.0);
  return m;
}

// Brute-force O(n^2 m^2) energy distance straight from the definition.
double energy_naive(const Matrix2D& x, const Matrix2D& y) {
  auto dist = [](std::span<const double> a, std::span<const double> b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
  };
  auto mean_dist = [&](const Matrix2D& a, const Matrix2D& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.rows(); ++i)
      for (std::size_t j = 0; j < b.rows(); ++j) s += dist(a.row(i), b.row(j));
    return s / double(a.rows() * b.rows());
  };
  return std::max(0.0, 2 * mean_dist(x, y) - mean_dist(x, x) - mean_dist(y, y));
}

}  // namespace

TEST(BinWidth, Examples) {
  const std::vector<double> xs{0, 1, 2, 3, 4, 5, 6, 7};
  EXPECT_DOUBLE_EQ(fd_bin_width(xs), 3.5);
  EXPECT_DOUBLE_EQ(fd_bin_width(std::vector<double>(10, 4.2)), 1.0);
  std::vector<double> scaled = xs;
  for (auto& v : scaled) v *= 2.5;
  EXPECT_DOUBLE_EQ(fd_bin_width(scaled), 2.5 * 3.5);
  // zero IQR but nonzero range
  const std::vector<double> spike{0, 0, 0, 0, 0, 0, 0, 8};
  EXPECT_DOUBLE_EQ(fd_bin_width(spike), 2.0 * 8.0 / 2.0);
  EXPECT_THROW(fd_bin_width(std::vector<double>{1, 2, 3}), std::invalid_argument);
}

TEST(Histogram, PairInvariants) {
  Rng r(1);
  std::vector<double> a(500), b(700);
  for (auto& v : a) v = r.normal();
  for (auto& v : b) v = 2.0 + r.normal();
  const auto [ha, hb] = histogram_pair(a, b);
  EXPECT_EQ(ha.edges, hb.edges);
  for (std::size_t i = 0; i + 1 < ha.edges.size(); ++i) EXPECT_LT(ha.edges[i], ha.edges[i + 1]);
  EXPECT_NEAR(std::accumulate(ha.masses.begin(), ha.masses.end(), 0.0), 1.0, 1e-12);
  EXPECT_NEAR(std::accumulate(hb.masses.begin(), hb.masses.end(), 0.0), 1.0, 1e-12);
  EXPECT_LE(ha.edges.front(), *std::min_element(a.begin(), a.end()));
  EXPECT_GE(ha.edges.back(), *std::max_element(b.begin(), b.end()));
}

TEST(Histogram, IdenticalAndDisjointInputs) {
  const std::vector<double> a{0.1, 0.5, 0.9, 1.3, 2.0};
  const auto [p, q] = histogram_pair(a, a);
  EXPECT_EQ(p.masses, q.masses);
  const std::vector<double> lo{0, 0.1, 0.2, 0.3}, hi{100, 100.1, 100.2, 100.3};
  const auto [l, h] = histogram_pair(lo, hi);
  for (std::size_t i = 0; i < l.bins(); ++i) EXPECT_FALSE(l.masses[i] > 0 && h.masses[i] > 0);
  // the maximum lands in the last bin
  EXPECT_GT(h.masses.back(), 0.0);
  EXPECT_THROW(histogram_pair(std::vector<double>{}, a), std::invalid_argument);
}

TEST(Divergences, KlExamples) {
  const auto p = hist({0.75, 0.25}), q = hist({0.5, 0.5});
  EXPECT_NEAR(kl(p, q), 0.75 * std::log(1.5) + 0.25 * std::log(0.5), 1e-6);
  EXPECT_NEAR(kl(p, q), 0.130812, 1e-6);
  EXPECT_NEAR(kl(p, p), 0.0, 1e-12);
  EXPECT_GT(std::abs(kl(p, q) - kl(q, p)), 1e-3);
  // empty bins in q stay finite through smoothing
  EXPECT_TRUE(std::isfinite(kl(hist({1, 0}), hist({0, 1}))));
}

TEST(Divergences, JsExamples) {
  EXPECT_NEAR(js(hist({1, 0}), hist({0, 1})), std::numbers::ln2, 1e-12);
  EXPECT_EQ(js(hist({0.2, 0.8}), hist({0.2, 0.8})), 0.0);
  Rng r(2);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> a(6), b(6);
    for (auto& v : a) v = r.uniform();
    for (auto& v : b) v = r.uniform();
    const double sa = std::accumulate(a.begin(), a.end(), 0.0), sb = std::accumulate(b.begin(), b.end(), 0.0);
    for (auto& v : a) v /= sa;
    for (auto& v : b) v /= sb;
    const double j = js(hist(a), hist(b));
    EXPECT_DOUBLE_EQ(j, js(hist(b), hist(a)));
    EXPECT_GE(j, 0.0);
    EXPECT_LE(j, std::numbers::ln2);
  }
}

TEST(Divergences, MismatchedEdgesThrow) {
  auto p = hist({0.5, 0.5}), q = hist({0.5, 0.5});
  q.edges[1] = 0.5;
  EXPECT_THROW(kl(p, q), std::invalid_argument);
  EXPECT_THROW(js(p, q), std::invalid_argument);
}

TEST(Wasserstein, Examples) {
  const std::vector<double> a{0.3, -1, 4};
  EXPECT_EQ(wd1(a, a), 0.0);
  EXPECT_EQ(wd1(std::vector<double>{0}, std::vector<double>{3}), 3.0);
  EXPECT_EQ(wd1(std::vector<double>{0, 2}, std::vector<double>{1, 3}), 1.0);
  EXPECT_EQ(wd1(std::vector<double>{2, 0}, std::vector<double>{3, 1}), 1.0);
  EXPECT_THROW(wd1(a, std::vector<double>{1}), std::invalid_argument);
}

TEST(Wasserstein, AgreesWithFineHistogramCdf) {
  Rng r(5);
  std::vector<double> a(4000), b(4000);
  for (auto& v : a) v = r.normal();
  for (auto& v : b) v = 0.7 + 1.3 * r.normal();
  const auto [p, q] = histogram_pair(a, b);
  // shift 0.7 plus scale difference; the binned CDF estimate tracks the exact one
  EXPECT_NEAR(wd1_histogram(p, q), wd1(a, b), 0.05);
}

TEST(Energy, Examples) {
  const Matrix2D x{{0.0}}, y{{1.0}};
  EXPECT_DOUBLE_EQ(energy_distance(x, y), 2.0);
  const Matrix2D z{{0.0}, {1.0}};
  EXPECT_NEAR(energy_distance(z, z), 0.0, 1e-15);
  Rng r(3);
  const auto a = normal_batch(40, 5, r), b = normal_batch(30, 5, r, 1.0);
  EXPECT_NEAR(energy_distance(a, a), 0.0, 1e-6);
  EXPECT_NEAR(energy_distance(a, b), energy_naive(a, b), 1e-9);
  EXPECT_THROW(energy_distance(a, Matrix2D(3, 4)), ShapeError);
}

TEST(Report, IdenticalBatchesAreNearZero) {
  Rng r(4);
  const auto a = normal_batch(1024, 3, r);
  const auto rep = divergence_report(a, a);
  EXPECT_LT(rep.kl, 1e-6);
  EXPECT_LT(rep.js, 1e-6);
  EXPECT_EQ(rep.wd, 0.0);
  EXPECT_NEAR(rep.energy, 0.0, 1e-6);
  EXPECT_THROW(divergence_report(a, Matrix2D(1024, 2)), ShapeError);
}

TEST(Report, IsSumOfMarginalsAndEnergyIsJoint) {
  Rng r(8);
  const auto a = normal_batch(300, 4, r), b = normal_batch(300, 4, r, 0.5);
  const auto rep = divergence_report(a, b);
  double kls = 0, jss = 0, wds = 0;
  for (std::size_t c = 0; c < 4; ++c) {
    const auto [p, q] = histogram_pair(a.column(c), b.column(c));
    kls += kl(p, q);
    jss += js(p, q);
    wds += wd1(a.column(c), b.column(c));
  }
  EXPECT_DOUBLE_EQ(rep.kl, kls);
  EXPECT_DOUBLE_EQ(rep.js, jss);
  EXPECT_DOUBLE_EQ(rep.wd, wds);
  EXPECT_NEAR(rep.energy, energy_naive(a, b), 1e-9);
}

TEST(Report, ShiftedDimensionIncreasesEveryMeasure) {
  Rng r(10);
  const auto real = normal_batch(1024, 2, r);
  Rng r2(11);
  const auto same = normal_batch(1024, 2, r2);
  Rng r3(11);
  const auto shifted = normal_batch(1024, 2, r3, 5.0);
  const auto base = divergence_report(real, same), far = divergence_report(real, shifted);
  EXPECT_GT(far.kl, base.kl);
  EXPECT_GT(far.js, base.js + 0.5);
  EXPECT_GT(far.wd, base.wd);
  EXPECT_GT(far.energy, base.energy);
}

TEST(Report, CsvFragmentAndMetricNames) {
  const DivergenceReport rep{0.5, 1.0 / 3.0, 2.0, 1e-7};
  EXPECT_EQ(to_csv_fragment(rep), "0.5,0.333333,2,1e-07");
  for (Metric m : {Metric::kl, Metric::js, Metric::wd, Metric::energy}) EXPECT_EQ(parse_metric(metric_name(m)), m);
  EXPECT_EQ(metric_value(rep, Metric::wd), 2.0);
  EXPECT_THROW(parse_metric("tv"), std::invalid_argument);
}

TEST(LogLik, Examples) {
  DistributionSpec s;
  s.family = Family::normal;
  s.dim = 1;
  s.first = {0.0};
  s.covariance = Matrix2D::scalar(1.0);
  finalize_spec(s);
  EXPECT_NEAR(gaussian_avg_loglik(s, Matrix2D{{0.0}}), -0.918939, 1e-6);
  EXPECT_LT(gaussian_avg_loglik(s, Matrix2D{{6.0}}), gaussian_avg_loglik(s, Matrix2D{{0.1}}));
  Rng r(1);
  EXPECT_THROW(gaussian_avg_loglik(make_spec(Family::gamma, 1, r), Matrix2D{{1.0}}), std::invalid_argument);
}

TEST(LogLik, MatchesAnalyticExpectation) {
  Rng r(21);
  const auto s = make_spec(Family::normal, 5, r);
  const auto xs = sample(s, 100000, r);
  const double analytic = -0.5 * (5 * std::log(2 * std::numbers::pi) + s.log_det_cov + 5);
  EXPECT_NEAR(gaussian_avg_loglik(s, xs), analytic, 0.02 * std::abs(analytic));
}

TEST(Baseline, PositiveDeterministicAndShrinksWithBatch) {
  Rng r(3);
  const auto s = make_spec(Family::laplace, 4, r);
  Rng a(9), b(9);
  const auto big = expected_baseline(s, 1024, 20, a);
  EXPECT_EQ(big, expected_baseline(s, 1024, 20, b));
  EXPECT_GT(big.kl, 0.0);
  EXPECT_GT(big.js, 0.0);
  EXPECT_GT(big.wd, 0.0);
  EXPECT_GT(big.energy, 0.0);
  Rng c(9);
  const auto small = expected_baseline(s, 256, 20, c);
  EXPECT_GT(small.wd, big.wd);
  EXPECT_GT(small.energy, big.energy);
  EXPECT_THROW(expected_baseline(s, 1, 1, c), std::invalid_argument);
}
