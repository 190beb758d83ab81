#pragma once

// Built-in oracle checks run by `ganbench selftest`.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "ganbench/distributions.hpp"
#include "ganbench/ganzoo.hpp"
#include "ganbench/metrics.hpp"

namespace ganbench {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // perturbation crossed a kink
};

/// |a - b| / max(|a|, |b|, floor)
inline double relative_error(double a, double b, double floor = 1e-3) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Central differences against reverse mode for every entry of `stores`.
/// `objective` records a scalar on the tape it is given.
inline GradCheckResult gradient_check(const std::vector<ParameterStore*>& stores,
                                      const std::function<Var(Tape&)>& objective, double step = 1e-4) {
  for (auto* s : stores) s->zero_grad();
  std::vector<std::uint8_t> base_kinks;
  {
    Tape tape;
    const Var loss = objective(tape);
    base_kinks = tape.kink_signature();
    tape.backward(loss);
  }
  auto probe = [&](std::vector<std::uint8_t>& kinks) {
    Tape tape;
    const Var loss = objective(tape);
    kinks = tape.kink_signature();
    return tape.scalar(loss);
  };
  GradCheckResult res;
  std::vector<std::uint8_t> kp, km;
  for (auto* s : stores) {
    s->for_each_parameter([&](double& w, double& g) {
      const double saved = w;
      w = saved + step;
      const double fp = probe(kp);
      w = saved - step;
      const double fm = probe(km);
      w = saved;
      if (kp != base_kinks || km != base_kinks) {
        ++res.skipped;
        return;
      }
      res.max_rel_error = std::max(res.max_rel_error, relative_error(g, (fp - fm) / (2.0 * step)));
      ++res.checked;
    });
    s->zero_grad();
  }
  return res;
}

/// A small fixed problem for checking one variant's gradients.
struct GradProblem {
  GanVariant variant;
  GanModels models;
  Minibatch batch;
};

inline GradProblem make_grad_problem(VariantKind kind, std::uint64_t seed, std::size_t n = 8, std::size_t d = 3,
                                     std::size_t h = 8, PenaltyPoint point = PenaltyPoint::literal) {
  GradProblem p;
  p.variant = GanVariant::make(kind, point);
  if (kind == VariantKind::BEGAN) p.variant.began.k = 0.3;
  if (kind == VariantKind::FisherGAN) p.variant.fisher.lambda = 0.2;
  p.models = make_models(kind, d, h, seed);
  Rng rng = Rng(seed).split("batch");
  p.batch.real = Matrix2D(n, d);
  for (auto& x : p.batch.real.values()) x = rng.normal();
  draw_generator_inputs(p.models, n, rng, p.batch);
  draw_penalty_inputs(p.variant, n, d, rng, p.batch);
  p.batch.data_std = column_stddevs(p.batch.real);
  return p;
}

inline std::vector<ParameterStore*> discriminator_stores(GanModels& m) {
  std::vector<ParameterStore*> s{&m.d_params};
  if (m.has_code()) s.push_back(&m.q_params);
  return s;
}

struct SelfTestCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Published parameter totals by hidden size (rows 32..512) and data
/// dimension (columns 16..128): {standard, InfoGAN, BEGAN}.
inline constexpr std::array<std::array<std::array<std::size_t, 3>, 4>, 5> kReferenceParamCounts{{
    {{{1393, 1821, 1888}, {2433, 2861, 3456}, {4513, 4941, 6592}, {8673, 9101, 12864}}},
    {{{3281, 4125, 4256}, {5345, 6189, 7360}, {9473, 10317, 13568}, {17729, 18573, 25984}}},
    {{{8593, 10269, 10528}, {12705, 14381, 16704}, {20929, 22605, 29056}, {37377, 39053, 53760}}},
    {{{25361, 28701, 29216}, {33569, 36909, 41536}, {49985, 53325, 66176}, {82817, 86157, 115456}}},
    {{{83473, 90141, 91168}, {99873, 106541, 115776}, {132673, 139341, 164992}, {198273, 204941, 263424}}},
}};
inline constexpr std::array<std::size_t, 4> kReferenceDims{16, 32, 64, 128};

inline std::vector<SelfTestCheck> run_selftest() {
  std::vector<SelfTestCheck> out;

  {
    std::size_t mismatches = 0;
    const std::array<VariantKind, 3> kinds{VariantKind::NSGAN, VariantKind::InfoGAN, VariantKind::BEGAN};
    for (std::size_t hi = 0; hi < kHiddenSizes.size(); ++hi)
      for (std::size_t di = 0; di < kReferenceDims.size(); ++di)
        for (std::size_t k = 0; k < 3; ++k)
          if (model_shapes(kinds[k], kReferenceDims[di], kHiddenSizes[hi]).parameter_count() !=
              kReferenceParamCounts[hi][di][k])
            ++mismatches;
    out.push_back({"parameter counts (60 cells)", mismatches == 0, std::to_string(mismatches) + " mismatches"});
  }

  for (VariantKind kind : kAllVariants) {
    GradProblem p = make_grad_problem(kind, 7);
    auto d_obj = [&](Tape& t) {
      return evaluate_objectives(p.variant, p.models, p.batch, t, Side::discriminator).d_objective;
    };
    auto g_obj = [&](Tape& t) { return evaluate_objectives(p.variant, p.models, p.batch, t, Side::generator).g_objective; };
    const auto rd = gradient_check(discriminator_stores(p.models), d_obj);
    const auto rg = gradient_check({&p.models.g_params}, g_obj);
    const double tol = p.variant.has_penalty() ? 1e-3 : 1e-4;
    const bool ok = rd.max_rel_error <= tol && rg.max_rel_error <= 1e-4 && rd.checked > 0 && rg.checked > 0;
    out.push_back({"gradients " + std::string(variant_name(kind)), ok,
                   "D " + format_g(rd.max_rel_error) + ", G " + format_g(rg.max_rel_error)});
  }

  {
    Rng rng(2024);
    const std::size_t n = 100000;
    Matrix2D a(n, 1), b(n, 1);
    for (auto& x : a.values()) x = rng.normal();
    for (auto& x : b.values()) x = rng.normal() + 1.0;
    const auto [ha, hb] = histogram_pair(a.values(), b.values());
    const double k = kl(ha, hb);
    const double w = wd1(a.values(), b.values());
    const double asym = std::abs(js(ha, hb) - js(hb, ha));
    out.push_back({"histogram KL of unit-shifted normals", std::abs(k - 0.5) <= 0.075, format_g(k)});
    out.push_back({"wd1 of unit-shifted normals", std::abs(w - 1.0) <= 0.05, format_g(w)});
    out.push_back({"JS symmetry", asym <= 1e-12, format_g(asym)});
    Matrix2D c(256, 4);
    for (auto& x : c.values()) x = rng.normal();
    const double e = energy_distance(c, c);
    out.push_back({"energy distance of identical batches", e == 0.0, format_g(e)});
  }
  return out;
}

}  // namespace ganbench
