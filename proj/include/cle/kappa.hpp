#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace cle {

inline constexpr double kKappaMin = 8.0 / 3.0;
inline constexpr double kKappaMax = 4.0;

inline bool kappa_in_range(double kappa) noexcept {
  return kappa > kKappaMin && kappa < kKappaMax;
}

/// Loop-soup intensity giving CLE_kappa: the inverse of kappa_of_central_charge. Defined on
/// (8/3, 4]; the endpoint 4 gives c = 1.
inline double central_charge(double kappa) {
  if (!(kappa > kKappaMin && kappa <= kKappaMax))
    throw std::domain_error("kappa must lie in (8/3, 4], got " + std::to_string(kappa));
  return (3.0 * kappa - 8.0) * (6.0 - kappa) / (2.0 * kappa);
}

/// kappa(c) = (13 - c - sqrt((1 - c)(25 - c))) / 3 for c in (0, 1].
inline double kappa_of_central_charge(double c) {
  if (!(c > 0.0 && c <= 1.0))
    throw std::domain_error("central charge must lie in (0, 1], got " + std::to_string(c));
  return (13.0 - c - std::sqrt((1.0 - c) * (25.0 - c))) / 3.0;
}

/// Four-arm exponent (12 - kappa)(4 + kappa) / (8 kappa); defined on (8/3, 4].
inline double four_arm_exponent(double kappa) {
  if (!(kappa > kKappaMin && kappa <= kKappaMax))
    throw std::domain_error("kappa must lie in (8/3, 4], got " + std::to_string(kappa));
  return (12.0 - kappa) * (4.0 + kappa) / (8.0 * kappa);
}

struct KappaParams {
  double kappa = 3.0;
  double c = 0.5;
  double alpha_4a = 2.625;     // four-arm exponent
  double dim_carpet = 1.0;     // Hausdorff dimension of the carpet
  double theta_deng = 1.0;     // Monte Carlo prediction for the distance exponent
  double theta_upper = 1.375;  // 1 + kappa/8

  static KappaParams from_kappa(double kappa) {
    KappaParams p;
    p.kappa = kappa;
    p.c = central_charge(kappa);
    p.alpha_4a = four_arm_exponent(kappa);
    p.dim_carpet = 1.0 + 2.0 / kappa + 3.0 * kappa / 32.0;
    p.theta_deng = (9.0 * kappa + 8.0) * (kappa + 8.0) / (128.0 * kappa);
    p.theta_upper = 1.0 + kappa / 8.0;
    return p;
  }

  bool operator==(const KappaParams&) const = default;
};

}  // namespace cle
