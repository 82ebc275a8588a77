#include <gtest/gtest.h>

#include <cmath>

#include "cle/kappa.hpp"

namespace {

using namespace cle;

// Independent inverse: bisection on the monotone map c -> kappa(c).
double kappa_by_bisection_inverse(double kappa) {
  double lo = 1e-15, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (kappa_of_central_charge(mid) < kappa ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

TEST(CentralCharge, ExactValues) {
  EXPECT_DOUBLE_EQ(central_charge(4.0), 1.0);
  EXPECT_DOUBLE_EQ(central_charge(3.0), 0.5);
  EXPECT_NEAR(central_charge(3.2), 0.7, 1e-15);
  EXPECT_DOUBLE_EQ(kappa_of_central_charge(1.0), 4.0);
  EXPECT_DOUBLE_EQ(kappa_of_central_charge(0.5), 3.0);
  EXPECT_NEAR(kappa_of_central_charge(0.7), 3.2, 1e-14);
}

TEST(CentralCharge, MatchesBisectionInverse) {
  for (double k = 2.7; k < 4.0; k += 0.01) EXPECT_NEAR(central_charge(k), kappa_by_bisection_inverse(k), 1e-12) << k;
}

TEST(CentralCharge, RoundTripOnFineGrid) {
  const double lo = 8.0 / 3.0, hi = 4.0;
  for (int i = 1; i <= 1000; ++i) {
    const double k = lo + (hi - lo) * i / 1001.0;
    EXPECT_LT(std::abs(kappa_of_central_charge(central_charge(k)) - k), 1e-12) << k;
  }
}

TEST(CentralCharge, DomainErrors) {
  EXPECT_THROW(central_charge(8.0 / 3.0), std::domain_error);
  EXPECT_THROW(central_charge(4.5), std::domain_error);
  EXPECT_THROW(central_charge(std::nan("")), std::domain_error);
  EXPECT_THROW(kappa_of_central_charge(0.0), std::domain_error);
  EXPECT_THROW(kappa_of_central_charge(1.5), std::domain_error);
  EXPECT_THROW(KappaParams::from_kappa(2.0), std::domain_error);
}

TEST(CentralCharge, VanishesTowardLowerEndpoint) {
  EXPECT_LT(central_charge(8.0 / 3.0 + 1e-9), 1e-8);
  EXPECT_GT(central_charge(8.0 / 3.0 + 1e-9), 0.0);
}

TEST(KappaParams, ValuesAtThree) {
  const KappaParams p = KappaParams::from_kappa(3.0);
  EXPECT_DOUBLE_EQ(p.alpha_4a, 63.0 / 24.0);
  EXPECT_NEAR(p.dim_carpet, 1.0 + 2.0 / 3.0 + 9.0 / 32.0, 1e-15);
  EXPECT_NEAR(p.theta_deng, 385.0 / 384.0, 1e-15);
  EXPECT_DOUBLE_EQ(p.theta_upper, 1.375);
}

TEST(KappaParams, FourArmExponentAtFour) { EXPECT_DOUBLE_EQ(four_arm_exponent(4.0), 2.0); }

TEST(KappaParams, InvariantsAcrossRange) {
  for (double k = 2.67; k < 4.0; k += 0.005) {
    const KappaParams p = KappaParams::from_kappa(k);
    EXPECT_GT(p.alpha_4a, 2.0);
    EXPECT_GT(p.dim_carpet, 1.875);
    EXPECT_LT(p.dim_carpet, 2.0);
    EXPECT_GT(p.theta_deng, 1.0);
    EXPECT_LT(p.theta_deng, p.theta_upper);
    EXPECT_LT(p.theta_upper, 2.0);
    EXPECT_GT(p.c, 0.0);
    EXPECT_LE(p.c, 1.0);
  }
}

}  // namespace
