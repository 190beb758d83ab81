#pragma once

// Parameterized target families, uniform same-family mixtures and the
// generator noise prior.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Cholesky>
#include <nlohmann/json.hpp>

#include "ganbench/matrix.hpp"
#include "ganbench/rng.hpp"

namespace ganbench {

enum class Family { normal, exponential, beta, gamma, gumbel, laplace };

inline constexpr std::array<Family, 6> kAllFamilies{Family::normal, Family::exponential, Family::beta,
                                                    Family::gamma,  Family::gumbel,      Family::laplace};

inline std::string_view family_name(Family f) {
  switch (f) {
    case Family::normal: return "normal";
    case Family::exponential: return "exponential";
    case Family::beta: return "beta";
    case Family::gamma: return "gamma";
    case Family::gumbel: return "gumbel";
    case Family::laplace: return "laplace";
  }
  return "?";
}

inline Family parse_family(std::string_view s) {
  for (Family f : kAllFamilies)
    if (family_name(f) == s) return f;
  throw std::invalid_argument("unknown distribution family '" + std::string(s) + "'");
}

/// Fully determines a target distribution p_d.
///
/// Parameter vectors by family:
///   normal       mean (first), covariance + cached Cholesky factor
///   exponential  rate (first)
///   beta         alpha (first), beta (second)
///   gamma        shape (first), scale (second)
///   gumbel       location (first), scale (second)
///   laplace      location (first), scale (second)
struct DistributionSpec {
  Family family = Family::normal;
  std::size_t dim = 1;
  std::vector<double> first;
  std::vector<double> second;
  Matrix2D covariance;
  Matrix2D cholesky;  // lower triangular
  double log_det_cov = 0.0;

  friend bool operator==(const DistributionSpec&, const DistributionSpec&) = default;
};

namespace detail {
inline void factor_covariance(DistributionSpec& s) {
  const std::size_t d = s.dim;
  Eigen::MatrixXd cov(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) cov(Eigen::Index(i), Eigen::Index(j)) = s.covariance(i, j);
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("normal covariance is not positive-definite");
  Eigen::MatrixXd l = llt.matrixL();
  s.cholesky = Matrix2D(d, d);
  s.log_det_cov = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j <= i; ++j) s.cholesky(i, j) = l(Eigen::Index(i), Eigen::Index(j));
    s.log_det_cov += 2.0 * std::log(s.cholesky(i, i));
  }
}

inline void check_positive(const std::vector<double>& v, const char* what) {
  for (double x : v)
    if (!(x > 0.0) || !std::isfinite(x)) throw std::invalid_argument(std::string(what) + " must be strictly positive");
}
}  // namespace detail

/// Validates parameter shapes and positivity; factors the covariance for normals.
inline void finalize_spec(DistributionSpec& s) {
  if (s.dim < 1) throw std::invalid_argument("distribution dimension must be >= 1");
  auto need = [&](const std::vector<double>& v, const char* what) {
    if (v.size() != s.dim) throw std::invalid_argument(std::string(what) + " has wrong length");
  };
  switch (s.family) {
    case Family::normal:
      need(s.first, "mean");
      if (s.covariance.rows() != s.dim || s.covariance.cols() != s.dim)
        throw std::invalid_argument("covariance has wrong shape");
      for (std::size_t i = 0; i < s.dim; ++i)
        for (std::size_t j = 0; j < i; ++j)
          if (s.covariance(i, j) != s.covariance(j, i)) throw std::invalid_argument("covariance is not symmetric");
      detail::factor_covariance(s);
      break;
    case Family::exponential:
      need(s.first, "rate");
      detail::check_positive(s.first, "rate");
      break;
    case Family::beta:
    case Family::gamma:
      need(s.first, "shape");
      need(s.second, "shape/scale");
      detail::check_positive(s.first, "shape");
      detail::check_positive(s.second, "shape/scale");
      break;
    case Family::gumbel:
    case Family::laplace:
      need(s.first, "location");
      need(s.second, "scale");
      detail::check_positive(s.second, "scale");
      break;
  }
}

inline constexpr double kGammaShapeFloor = 1e-2;

/// Draws a random member of `family` in `d` dimensions.
inline DistributionSpec make_spec(Family family, std::size_t d, Rng& rng) {
  if (d < 1) throw std::invalid_argument("make_spec: dimension must be >= 1");
  DistributionSpec s;
  s.family = family;
  s.dim = d;
  auto draw = [&](auto&& gen) {
    std::vector<double> v(d);
    for (auto& x : v) x = gen();
    return v;
  };
  switch (family) {
    case Family::normal: {
      s.first = draw([&] { return rng.uniform(); });
      Matrix2D a(d, d);
      for (auto& x : a.values()) x = rng.uniform();
      s.covariance = matmul_bt(a, a);
      for (auto& x : s.covariance.values()) x /= double(d);
      for (std::size_t i = 0; i < d; ++i) s.covariance(i, i) += 1e-3;
      // Symmetrize exactly; the product is symmetric only up to rounding.
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < i; ++j) s.covariance(j, i) = s.covariance(i, j);
      break;
    }
    case Family::exponential: s.first = draw([&] { return rng.uniform_open(); }); break;
    case Family::beta:
      s.first = draw([&] { return rng.uniform_open(); });
      s.second = draw([&] { return rng.uniform_open(); });
      break;
    case Family::gamma:
      s.first = draw([&] { return std::max(10.0 * rng.uniform_open(), kGammaShapeFloor); });
      s.second = draw([&] { return 2.0 * rng.uniform_open(); });
      break;
    case Family::gumbel:
    case Family::laplace:
      s.first = draw([&] { return rng.uniform(); });
      s.second = draw([&] { return rng.uniform_open(); });
      break;
  }
  finalize_spec(s);
  return s;
}

namespace detail {
/// log of a Gamma(shape, 1) variate (Marsaglia-Tsang squeeze; shapes below one
/// are boosted via Gamma(a) = Gamma(a + 1) * U^(1/a)). Kept in log space so tiny
/// shapes do not underflow.
inline double log_gamma_variate(double shape, Rng& rng) {
  double boost = 0.0;
  if (shape < 1.0) {
    boost = std::log(rng.uniform_open()) / shape;
    shape += 1.0;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform_open();
    if (u < 1.0 - 0.0331 * x * x * x * x || std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
      return std::log(d * v) + boost;
  }
}
}  // namespace detail

/// Writes one draw of `spec` into `out` (length dim).
inline void sample_row(const DistributionSpec& s, Rng& rng, std::span<double> out) {
  const std::size_t d = s.dim;
  switch (s.family) {
    case Family::normal: {
      std::vector<double> z(d);
      for (auto& x : z) x = rng.normal();
      for (std::size_t i = 0; i < d; ++i) {
        double acc = s.first[i];
        for (std::size_t j = 0; j <= i; ++j) acc += s.cholesky(i, j) * z[j];
        out[i] = acc;
      }
      break;
    }
    case Family::exponential:
      for (std::size_t i = 0; i < d; ++i) out[i] = -std::log(rng.uniform_open()) / s.first[i];
      break;
    case Family::beta:
      for (std::size_t i = 0; i < d; ++i) {
        const double la = detail::log_gamma_variate(s.first[i], rng);
        const double lb = detail::log_gamma_variate(s.second[i], rng);
        double x = 1.0 / (1.0 + std::exp(lb - la));
        if (x <= 0.0) x = std::numeric_limits<double>::min();
        if (x >= 1.0) x = std::nextafter(1.0, 0.0);
        out[i] = x;
      }
      break;
    case Family::gamma:
      for (std::size_t i = 0; i < d; ++i)
        out[i] = std::exp(detail::log_gamma_variate(s.first[i], rng)) * s.second[i];
      break;
    case Family::gumbel:
      for (std::size_t i = 0; i < d; ++i) out[i] = s.first[i] - s.second[i] * std::log(-std::log(rng.uniform_open()));
      break;
    case Family::laplace:
      for (std::size_t i = 0; i < d; ++i) {
        double u;
        do {
          u = rng.uniform() - 0.5;
        } while (u == -0.5);
        const double mag = -s.second[i] * std::log(1.0 - 2.0 * std::abs(u));
        out[i] = s.first[i] + (u < 0.0 ? -mag : mag);
      }
      break;
  }
}

/// n i.i.d. rows from `spec`.
inline Matrix2D sample(const DistributionSpec& s, std::size_t n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
  Matrix2D out(n, s.dim);
  for (std::size_t r = 0; r < n; ++r) sample_row(s, rng, out.row(r));
  return out;
}

/// Log of the normalized joint density; -infinity outside the support.
inline double log_density(const DistributionSpec& s, std::span<const double> x) {
  if (x.size() != s.dim) throw ShapeError("log_density: point has wrong dimension");
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  const std::size_t d = s.dim;
  double lp = 0.0;
  switch (s.family) {
    case Family::normal: {
      // Forward substitution L y = x - mu.
      std::vector<double> y(d);
      double quad = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        double acc = x[i] - s.first[i];
        for (std::size_t j = 0; j < i; ++j) acc -= s.cholesky(i, j) * y[j];
        y[i] = acc / s.cholesky(i, i);
        quad += y[i] * y[i];
      }
      return -0.5 * (double(d) * std::log(2.0 * std::numbers::pi) + s.log_det_cov + quad);
    }
    case Family::exponential:
      for (std::size_t i = 0; i < d; ++i) {
        if (x[i] < 0.0) return kNegInf;
        lp += std::log(s.first[i]) - s.first[i] * x[i];
      }
      return lp;
    case Family::beta:
      for (std::size_t i = 0; i < d; ++i) {
        if (!(x[i] > 0.0 && x[i] < 1.0)) return kNegInf;
        const double a = s.first[i], b = s.second[i];
        lp += (a - 1.0) * std::log(x[i]) + (b - 1.0) * std::log1p(-x[i]) - std::lgamma(a) - std::lgamma(b) +
              std::lgamma(a + b);
      }
      return lp;
    case Family::gamma:
      for (std::size_t i = 0; i < d; ++i) {
        const double k = s.first[i], theta = s.second[i];
        if (x[i] < 0.0) return kNegInf;
        if (x[i] == 0.0) {
          if (k > 1.0) return kNegInf;
          if (k < 1.0) return std::numeric_limits<double>::infinity();
          lp += -std::log(theta);
          continue;
        }
        lp += (k - 1.0) * std::log(x[i]) - x[i] / theta - std::lgamma(k) - k * std::log(theta);
      }
      return lp;
    case Family::gumbel:
      for (std::size_t i = 0; i < d; ++i) {
        const double z = (x[i] - s.first[i]) / s.second[i];
        lp += -std::log(s.second[i]) - z - std::exp(-z);
      }
      return lp;
    case Family::laplace:
      for (std::size_t i = 0; i < d; ++i)
        lp += -std::log(2.0 * s.second[i]) - std::abs(x[i] - s.first[i]) / s.second[i];
      return lp;
  }
  return kNegInf;
}

/// Equal-weight mixture of same-family, same-dimension components.
struct MixtureSpec {
  std::vector<DistributionSpec> components;

  void validate() const {
    if (components.empty()) throw std::invalid_argument("mixture needs at least one component");
    for (const auto& c : components)
      if (c.family != components[0].family || c.dim != components[0].dim)
        throw std::invalid_argument("mixture components must share family and dimension");
  }
  std::size_t dim() const { return components.at(0).dim; }
  double weight() const { return 1.0 / double(components.size()); }
};

/// Rows drawn by picking a component uniformly, then sampling from it.
inline Matrix2D sample_mixture(const MixtureSpec& mix, std::size_t n, Rng& rng,
                               std::vector<std::size_t>* chosen = nullptr) {
  mix.validate();
  if (n < 1) throw std::invalid_argument("sample_mixture: n must be >= 1");
  Matrix2D out(n, mix.dim());
  if (chosen) chosen->assign(n, 0);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t k = rng.below(mix.components.size());
    if (chosen) (*chosen)[r] = k;
    sample_row(mix.components[k], rng, out.row(r));
  }
  return out;
}

/// log((1/m) * sum_i p_i(x)), via log-sum-exp.
inline double log_density_mixture(const MixtureSpec& mix, std::span<const double> x) {
  mix.validate();
  std::vector<double> lps;
  lps.reserve(mix.components.size());
  double mx = -std::numeric_limits<double>::infinity();
  for (const auto& c : mix.components) {
    lps.push_back(log_density(c, x));
    mx = std::max(mx, lps.back());
  }
  if (!std::isfinite(mx)) return mx;
  double acc = 0.0;
  for (double lp : lps) acc += std::exp(lp - mx);
  return mx + std::log(acc) - std::log(double(lps.size()));
}

/// Generator prior: n x (h/4) entries from N(0, h/4).
inline Matrix2D noise_sample(std::size_t h, std::size_t n, Rng& rng) {
  if (h == 0 || h % 4 != 0) throw std::invalid_argument("noise_sample: h must be a positive multiple of 4");
  const std::size_t k = h / 4;
  const double sd = std::sqrt(double(h) / 4.0);
  Matrix2D z(n, k);
  for (auto& v : z.values()) v = sd * rng.normal();
  return z;
}

// Structured text record of a spec (JSON); exact round trip.

inline void to_json(nlohmann::json& j, const DistributionSpec& s) {
  j = nlohmann::json{{"family", family_name(s.family)}, {"dim", s.dim}};
  switch (s.family) {
    case Family::normal: {
      j["mean"] = s.first;
      std::vector<std::vector<double>> rows(s.dim);
      for (std::size_t i = 0; i < s.dim; ++i) rows[i].assign(s.covariance.row(i).begin(), s.covariance.row(i).end());
      j["covariance"] = rows;
      break;
    }
    case Family::exponential: j["rate"] = s.first; break;
    case Family::beta:
      j["alpha"] = s.first;
      j["beta"] = s.second;
      break;
    case Family::gamma:
      j["shape"] = s.first;
      j["scale"] = s.second;
      break;
    case Family::gumbel:
    case Family::laplace:
      j["location"] = s.first;
      j["scale"] = s.second;
      break;
  }
}

inline void from_json(const nlohmann::json& j, DistributionSpec& s) {
  s = DistributionSpec{};
  s.family = parse_family(j.at("family").get<std::string>());
  s.dim = j.at("dim").get<std::size_t>();
  switch (s.family) {
    case Family::normal: {
      s.first = j.at("mean").get<std::vector<double>>();
      auto rows = j.at("covariance").get<std::vector<std::vector<double>>>();
      s.covariance = Matrix2D(s.dim, s.dim);
      if (rows.size() != s.dim) throw std::invalid_argument("covariance has wrong shape");
      for (std::size_t i = 0; i < s.dim; ++i) {
        if (rows[i].size() != s.dim) throw std::invalid_argument("covariance has wrong shape");
        for (std::size_t k = 0; k < s.dim; ++k) s.covariance(i, k) = rows[i][k];
      }
      break;
    }
    case Family::exponential: s.first = j.at("rate").get<std::vector<double>>(); break;
    case Family::beta:
      s.first = j.at("alpha").get<std::vector<double>>();
      s.second = j.at("beta").get<std::vector<double>>();
      break;
    case Family::gamma:
      s.first = j.at("shape").get<std::vector<double>>();
      s.second = j.at("scale").get<std::vector<double>>();
      break;
    case Family::gumbel:
    case Family::laplace:
      s.first = j.at("location").get<std::vector<double>>();
      s.second = j.at("scale").get<std::vector<double>>();
      break;
  }
  finalize_spec(s);
}

inline std::string serialize_spec(const DistributionSpec& s) { return nlohmann::json(s).dump(); }
inline DistributionSpec parse_spec(std::string_view text) { return nlohmann::json::parse(text).get<DistributionSpec>(); }

}  // namespace ganbench
