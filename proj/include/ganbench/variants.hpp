#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ganbench {

enum class VariantKind {
  MMGAN,
  NSGAN,
  WGAN,
  WGANGP,
  DRAGAN,
  LSGAN,
  BEGAN,
  RaGAN,
  FisherGAN,
  InfoGAN,
  ForwGAN,
  RevGAN,
  HellingerGAN,
  PearsonGAN,
  JSGAN,
  TVGAN,
};

inline constexpr std::array<VariantKind, 16> kAllVariants{
    VariantKind::MMGAN,     VariantKind::NSGAN,   VariantKind::WGAN,         VariantKind::WGANGP,
    VariantKind::DRAGAN,    VariantKind::LSGAN,   VariantKind::BEGAN,        VariantKind::RaGAN,
    VariantKind::FisherGAN, VariantKind::InfoGAN, VariantKind::ForwGAN,      VariantKind::RevGAN,
    VariantKind::HellingerGAN, VariantKind::PearsonGAN, VariantKind::JSGAN,  VariantKind::TVGAN};

inline std::string_view variant_name(VariantKind k) {
  switch (k) {
    case VariantKind::MMGAN: return "MMGAN";
    case VariantKind::NSGAN: return "NSGAN";
    case VariantKind::WGAN: return "WGAN";
    case VariantKind::WGANGP: return "WGANGP";
    case VariantKind::DRAGAN: return "DRAGAN";
    case VariantKind::LSGAN: return "LSGAN";
    case VariantKind::BEGAN: return "BEGAN";
    case VariantKind::RaGAN: return "RaGAN";
    case VariantKind::FisherGAN: return "FisherGAN";
    case VariantKind::InfoGAN: return "InfoGAN";
    case VariantKind::ForwGAN: return "ForwGAN";
    case VariantKind::RevGAN: return "RevGAN";
    case VariantKind::HellingerGAN: return "HellingerGAN";
    case VariantKind::PearsonGAN: return "PearsonGAN";
    case VariantKind::JSGAN: return "JSGAN";
    case VariantKind::TVGAN: return "TVGAN";
  }
  return "?";
}

inline VariantKind parse_variant(std::string_view s) {
  for (VariantKind k : kAllVariants)
    if (variant_name(k) == s) return k;
  throw std::invalid_argument("unknown GAN variant '" + std::string(s) + "'");
}

/// Where the WGANGP penalty gradient is taken.
enum class PenaltyPoint {
  literal,      // d/dz of D(G(z)) at sampled noise
  interpolate,  // d/dx of D at u*x + (1-u)*G(z)
};

inline std::string_view penalty_point_name(PenaltyPoint p) {
  return p == PenaltyPoint::literal ? "literal" : "interpolate";
}

inline PenaltyPoint parse_penalty_point(std::string_view s) {
  if (s == "literal") return PenaltyPoint::literal;
  if (s == "interpolate") return PenaltyPoint::interpolate;
  throw std::invalid_argument("unknown WGANGP penalty point '" + std::string(s) + "'");
}

/// Proportional controller balancing BEGAN's real and fake reconstruction losses.
struct BeganState {
  double k = 0.0;
  double gamma = 0.5;
  double lambda_k = 0.001;
};

/// Augmented-Lagrangian multiplier for the Fisher second-moment constraint.
struct FisherState {
  double lambda = 0.0;
  double rho = 1e-6;
};

/// One GAN variant with its introduced hyperparameters and controller state.
struct GanVariant {
  VariantKind kind = VariantKind::NSGAN;
  double penalty_weight = 10.0;  // WGANGP, DRAGAN
  double clip = 0.01;            // WGAN
  double info_weight = 1.0;      // InfoGAN
  double dragan_noise = 0.5;     // delta = dragan_noise * per-dimension data std * N(0, 1)
  PenaltyPoint wgangp_point = PenaltyPoint::literal;
  BeganState began;
  FisherState fisher;

  static GanVariant make(VariantKind k, PenaltyPoint wgangp_point = PenaltyPoint::literal) {
    GanVariant v;
    v.kind = k;
    v.wgangp_point = wgangp_point;
    return v;
  }

  std::string_view name() const { return variant_name(kind); }
  bool has_penalty() const { return kind == VariantKind::WGANGP || kind == VariantKind::DRAGAN; }
  bool autoencoder_critic() const { return kind == VariantKind::BEGAN; }
  bool has_code() const { return kind == VariantKind::InfoGAN; }

  void validate() const {
    if (!(penalty_weight > 0.0) || !(clip > 0.0) || !(info_weight > 0.0) || !(began.gamma > 0.0) ||
        !(began.lambda_k > 0.0) || !(fisher.rho > 0.0))
      throw std::invalid_argument("GanVariant: hyperparameters must be strictly positive");
    if (began.k < 0.0 || began.k > 1.0) throw std::invalid_argument("GanVariant: BEGAN k_t outside [0, 1]");
  }
};

}  // namespace ganbench
