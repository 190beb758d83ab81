#pragma once

// Dimension-wise histogram estimates and the divergence measures reported
// per epoch: KL, JS, 1-Wasserstein and energy distance.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ganbench/distributions.hpp"
#include "ganbench/matrix.hpp"
#include "ganbench/rng.hpp"

namespace ganbench {

inline constexpr double kHistogramSmoothing = 1e-10;
inline constexpr std::size_t kMaxBins = 512;

struct Histogram1D {
  std::vector<double> edges;   // B + 1, strictly increasing
  std::vector<double> masses;  // B, sums to 1

  std::size_t bins() const { return masses.size(); }
};

/// Quantile with linear interpolation between order statistics ("type 7").
/// `sorted` must be ascending and non-empty.
inline double quantile_sorted(std::span<const double> sorted, double p) {
  const double h = double(sorted.size() - 1) * p;
  const auto lo = std::size_t(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - double(lo)) * (sorted[hi] - sorted[lo]);
}

/// Freedman-Diaconis width 2*IQR/cbrt(M). Falls back to the range when the IQR
/// is zero, and to 1 when every sample is equal.
inline double fd_bin_width(std::span<const double> samples) {
  if (samples.size() < 4) throw std::invalid_argument("fd_bin_width: need at least 4 samples");
  std::vector<double> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  const double cbrt_m = std::cbrt(double(s.size()));
  const double iqr = quantile_sorted(s, 0.75) - quantile_sorted(s, 0.25);
  if (iqr > 0.0) return 2.0 * iqr / cbrt_m;
  const double range = s.back() - s.front();
  if (range > 0.0) return 2.0 * range / cbrt_m;
  return 1.0;
}

namespace detail {
inline std::vector<double> bin_masses(std::span<const double> xs, const std::vector<double>& edges) {
  const std::size_t bins = edges.size() - 1;
  const double lo = edges.front();
  const double span = edges.back() - lo;
  std::vector<double> counts(bins, 0.0);
  for (double x : xs) {
    auto idx = std::size_t(std::max(0.0, std::floor((x - lo) / span * double(bins))));
    // Right-closed last bin; also absorbs round-off at the upper edge.
    idx = std::min(idx, bins - 1);
    // Keep assignment consistent with the materialized edges.
    while (idx > 0 && x < edges[idx]) --idx;
    while (idx + 1 < bins && x >= edges[idx + 1]) ++idx;
    counts[idx] += 1.0;
  }
  const double n = double(xs.size());
  for (auto& c : counts) c /= n;
  return counts;
}
}  // namespace detail

/// Histograms of `a` and `b` on shared equal-width edges spanning the union,
/// with the bin width chosen by Freedman-Diaconis on the union.
inline std::pair<Histogram1D, Histogram1D> histogram_pair(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("histogram_pair: empty sample");
  std::vector<double> all(a.begin(), a.end());
  all.insert(all.end(), b.begin(), b.end());
  const auto [mn, mx] = std::minmax_element(all.begin(), all.end());
  const double lo = *mn;
  const double hi = *mx + 1e-9 * std::max(1.0, std::abs(*mx));
  const double width = all.size() >= 4 ? fd_bin_width(all) : (hi - lo);
  auto bins = std::size_t(std::ceil((hi - lo) / width));
  bins = std::clamp<std::size_t>(bins, 1, kMaxBins);
  std::vector<double> edges(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) edges[i] = lo + (hi - lo) * double(i) / double(bins);
  edges.back() = hi;
  Histogram1D ha{edges, detail::bin_masses(a, edges)};
  Histogram1D hb{std::move(edges), detail::bin_masses(b, ha.edges)};
  return {std::move(ha), std::move(hb)};
}

namespace detail {
inline void require_shared_edges(const Histogram1D& p, const Histogram1D& q, const char* op) {
  if (p.edges != q.edges) throw std::invalid_argument(std::string(op) + ": histograms do not share edges");
}
}  // namespace detail

/// KL(p || q) after adding 1e-10 to every bin of both and renormalizing.
inline double kl(const Histogram1D& p, const Histogram1D& q) {
  detail::require_shared_edges(p, q, "kl");
  const double norm = 1.0 + double(p.bins()) * kHistogramSmoothing;
  double acc = 0.0;
  for (std::size_t i = 0; i < p.bins(); ++i) {
    const double ps = (p.masses[i] + kHistogramSmoothing) / norm;
    const double qs = (q.masses[i] + kHistogramSmoothing) / norm;
    acc += ps * std::log(ps / qs);
  }
  return std::max(0.0, acc);
}

/// Jensen-Shannon divergence, natural log; in [0, ln 2].
inline double js(const Histogram1D& p, const Histogram1D& q) {
  detail::require_shared_edges(p, q, "js");
  double kp = 0.0, kq = 0.0;
  for (std::size_t i = 0; i < p.bins(); ++i) {
    const double m = 0.5 * (p.masses[i] + q.masses[i]);
    if (p.masses[i] > 0.0) kp += p.masses[i] * std::log(p.masses[i] / m);
    if (q.masses[i] > 0.0) kq += q.masses[i] * std::log(q.masses[i] / m);
  }
  return std::max(0.0, 0.5 * kp + 0.5 * kq);
}

/// Exact 1-D 1-Wasserstein distance between equal-size empirical samples.
inline double wd1(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("wd1: samples must have equal size");
  if (a.empty()) throw std::invalid_argument("wd1: empty sample");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < sa.size(); ++i) acc += std::abs(sa[i] - sb[i]);
  return acc / double(sa.size());
}

/// Integral of |P - Q| over shared-edge histogram CDFs.
inline double wd1_histogram(const Histogram1D& p, const Histogram1D& q) {
  detail::require_shared_edges(p, q, "wd1_histogram");
  double cp = 0.0, cq = 0.0, acc = 0.0;
  for (std::size_t i = 0; i < p.bins(); ++i) {
    cp += p.masses[i];
    cq += q.masses[i];
    acc += std::abs(cp - cq) * (p.edges[i + 1] - p.edges[i]);
  }
  return acc;
}

namespace detail {
/// Mean Euclidean distance over all (i, j) row pairs, self-pairs included.
inline double mean_pair_distance(const Matrix2D& x, const Matrix2D& y) {
  const Matrix2D gram = matmul_bt(x, y);
  std::vector<double> nx(x.rows()), ny(y.rows());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (double v : x.row(i)) nx[i] += v * v;
  for (std::size_t j = 0; j < y.rows(); ++j)
    for (double v : y.row(j)) ny[j] += v * v;
  double total = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < y.rows(); ++j) row += std::sqrt(std::max(0.0, nx[i] + ny[j] - 2.0 * gram(i, j)));
    total += row;
  }
  return total / (double(x.rows()) * double(y.rows()));
}
}  // namespace detail

/// Energy distance V-statistic 2E|X-Y| - E|X-X'| - E|Y-Y'|, clamped at 0.
inline double energy_distance(const Matrix2D& x, const Matrix2D& y) {
  if (x.cols() != y.cols()) throw ShapeError("energy_distance: column mismatch");
  if (x.rows() == 0 || y.rows() == 0) throw std::invalid_argument("energy_distance: empty sample");
  const double exy = detail::mean_pair_distance(x, y);
  const double exx = detail::mean_pair_distance(x, x);
  const double eyy = detail::mean_pair_distance(y, y);
  return std::max(0.0, 2.0 * exy - exx - eyy);
}

struct DivergenceReport {
  double kl = 0.0;
  double js = 0.0;
  double wd = 0.0;
  double energy = 0.0;

  bool all_finite() const {
    return std::isfinite(kl) && std::isfinite(js) && std::isfinite(wd) && std::isfinite(energy);
  }
  friend bool operator==(const DivergenceReport&, const DivergenceReport&) = default;
};

inline std::string format_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

/// "kl,js,wd,energy" with 6 significant digits.
inline std::string to_csv_fragment(const DivergenceReport& r) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%.6g,%.6g,%.6g,%.6g", r.kl, r.js, r.wd, r.energy);
  return buf;
}

enum class Metric { kl, js, wd, energy };

inline std::string_view metric_name(Metric m) {
  switch (m) {
    case Metric::kl: return "kl";
    case Metric::js: return "js";
    case Metric::wd: return "wd";
    case Metric::energy: return "energy";
  }
  return "?";
}

inline Metric parse_metric(std::string_view s) {
  for (Metric m : {Metric::kl, Metric::js, Metric::wd, Metric::energy})
    if (metric_name(m) == s) return m;
  throw std::invalid_argument("unknown metric '" + std::string(s) + "'");
}

inline double metric_value(const DivergenceReport& r, Metric m) {
  switch (m) {
    case Metric::kl: return r.kl;
    case Metric::js: return r.js;
    case Metric::wd: return r.wd;
    case Metric::energy: return r.energy;
  }
  return 0.0;
}

/// Compares a generated batch against a real batch. KL, JS and WD are sums of
/// per-dimension values on marginals; energy uses the full rows. KL is
/// KL(real || generated).
inline DivergenceReport divergence_report(const Matrix2D& real_batch, const Matrix2D& gen_batch) {
  if (!real_batch.same_shape(gen_batch))
    throw ShapeError("divergence_report: " + real_batch.shape_string() + " vs " + gen_batch.shape_string());
  DivergenceReport rep;
  for (std::size_t c = 0; c < real_batch.cols(); ++c) {
    const auto a = real_batch.column(c);
    const auto b = gen_batch.column(c);
    const auto [pa, pb] = histogram_pair(a, b);
    rep.kl += kl(pa, pb);
    rep.js += js(pa, pb);
    rep.wd += wd1(a, b);
  }
  rep.energy = energy_distance(real_batch, gen_batch);
  return rep;
}

/// Mean log-likelihood of the rows of `samples` under a normal spec.
inline double gaussian_avg_loglik(const DistributionSpec& spec, const Matrix2D& samples) {
  if (spec.family != Family::normal) throw std::invalid_argument("gaussian_avg_loglik: spec is not normal");
  if (samples.cols() != spec.dim) throw ShapeError("gaussian_avg_loglik: dimension mismatch");
  double acc = 0.0;
  for (std::size_t r = 0; r < samples.rows(); ++r) acc += log_density(spec, samples.row(r));
  return acc / double(samples.rows());
}

/// Noise floor of a perfect generator: mean report between two independent
/// size-b batches of the true distribution, over `trials` repetitions.
inline DivergenceReport expected_baseline(const DistributionSpec& spec, std::size_t b, std::size_t trials, Rng& rng) {
  if (b < 2) throw std::invalid_argument("expected_baseline: b must be >= 2");
  if (trials < 1) throw std::invalid_argument("expected_baseline: trials must be >= 1");
  DivergenceReport acc;
  for (std::size_t t = 0; t < trials; ++t) {
    const Matrix2D x = sample(spec, b, rng);
    const Matrix2D y = sample(spec, b, rng);
    const auto r = divergence_report(x, y);
    acc.kl += r.kl;
    acc.js += r.js;
    acc.wd += r.wd;
    acc.energy += r.energy;
  }
  const double n = double(trials);
  return {acc.kl / n, acc.js / n, acc.wd / n, acc.energy / n};
}

}  // namespace ganbench
