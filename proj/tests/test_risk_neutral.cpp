#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "apm/risk_neutral.hpp"
#include "support.hpp"

namespace {

using apm::DistributionSpec;
using apm::ScalarLaw;
using apm::TiltMethod;
using testing_support::Gen;

double psi(double x) { return 0.5 + 1.0 / (1.0 + std::exp(x)); }

// g for Rademacher noise written out by hand.
double rademacher_g(double a, double b) {
  return 0.5 * ((1 - b) * psi(a * (1 - b)) - (1 + b) * psi(-a * (1 + b)));
}

// Root of the hand-written g by a fine scan followed by linear interpolation.
double scanned_root(double b) {
  const double step = 1e-5;
  double prev = rademacher_g(-20.0, b);
  for (double a = -20.0 + step; a <= 20.0; a += step) {
    const double cur = rademacher_g(a, b);
    if ((prev > 0) != (cur > 0)) return a - step * cur / (cur - prev);
    prev = cur;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

std::vector<DistributionSpec> builtin_noise() {
  return {DistributionSpec::rademacher(), DistributionSpec::standardized_uniform(),
          DistributionSpec::standardized_two_point(0.3), DistributionSpec::dyadic_tails(0.2),
          DistributionSpec::standard_normal()};
}

TEST(LogisticWeight, Values) {
  EXPECT_EQ(apm::logistic_weight(0.0), 1.0);
  EXPECT_NEAR(apm::logistic_weight(1.2), 0.73148, 1e-5);
  EXPECT_NEAR(apm::logistic_weight(1.2), psi(1.2), 1e-15);
  EXPECT_NEAR(apm::logistic_weight(800.0), 0.5, 1e-15);
  EXPECT_NEAR(apm::logistic_weight(-800.0), 1.5, 1e-15);
  double prev = 2.0;
  // Beyond |x| ~ 37 the weight rounds to its limits in double precision.
  for (double x = -30.0; x <= 30.0; x += 0.01) {
    const double v = apm::logistic_weight(x);
    EXPECT_GT(v, 0.5);
    EXPECT_LT(v, 1.5);
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(SolveTilt, RademacherDrift) {
  const auto law = DistributionSpec::rademacher().law();
  const auto t = apm::solve_tilt(law, 0.2);
  ASSERT_TRUE(t.converged);
  EXPECT_NEAR(t.a, -0.820, 1e-3);
  EXPECT_NEAR(t.a, scanned_root(0.2), 1e-8);
  EXPECT_LE(std::abs(t.residual), 1e-12);
  EXPECT_LE(std::abs(rademacher_g(t.a, 0.2)), 1e-12);
}

TEST(SolveTilt, ZeroDriftSymmetric) {
  for (const auto& d : builtin_noise()) {
    if (d.family() == apm::NoiseFamily::standardized_two_point) continue;
    const auto t = apm::solve_tilt(d.law(), 0.0);
    EXPECT_TRUE(t.converged);
    EXPECT_EQ(t.a, 0.0) << apm::to_string(d.family());
  }
}

TEST(SolveTilt, SignLaw) {
  const auto law = DistributionSpec::rademacher().law();
  for (double b : {0.05, 0.1, 0.3, 0.45}) {
    const auto up = apm::solve_tilt(law, b);
    const auto dn = apm::solve_tilt(law, -b);
    ASSERT_TRUE(up.converged && dn.converged);
    EXPECT_LT(up.a, 0.0);
    EXPECT_GT(dn.a, 0.0);
    EXPECT_NEAR(up.a, -dn.a, 1e-10);
  }
}

TEST(SolveTilt, OneSidedThrows) {
  const auto law = DistributionSpec::rademacher().law();
  EXPECT_THROW(apm::solve_tilt(law, 1.0), apm::TiltError);
  EXPECT_THROW(apm::solve_tilt(law, -1.5), apm::TiltError);
}

// psi is bounded in (1/2, 3/2): with b >= 1/2 the upside mass of a Rademacher
// coordinate can never balance the downside, so no root exists.
TEST(SolveTilt, UnreachableRootIsUnconverged) {
  const auto law = DistributionSpec::rademacher().law();
  const auto t = apm::solve_tilt(law, 0.6);
  EXPECT_FALSE(t.converged);
  EXPECT_LT(rademacher_g(-50.0, 0.6), 0.0);
}

TEST(TiltMoment, StrictlyDecreasing) {
  Gen g(3);
  for (const auto& d : builtin_noise()) {
    for (double b : {-0.3, 0.0, 0.2}) {
      for (int t = 0; t < 100; ++t) {
        const double a1 = g.uniform(-10.0, 9.9);
        const double a2 = g.uniform(a1 + 0.01, 10.0);
        EXPECT_GT(apm::tilt_moment(d.law(), b, a1), apm::tilt_moment(d.law(), b, a2))
            << apm::to_string(d.family()) << " b=" << b << " a=" << a1 << "," << a2;
      }
    }
  }
}

TEST(TiltMoment, AtZeroIsMinusDrift) {
  for (const auto& d : builtin_noise()) {
    for (double b : {-0.4, -0.1, 0.0, 0.25}) {
      EXPECT_NEAR(apm::tilt_moment(d.law(), b, 0.0), -b, 1e-12) << apm::to_string(d.family());
    }
  }
}

TEST(TiltedMeasure, ZeroDriftIsIdentity) {
  apm::BRule zero;
  zero.kind = apm::BRule::Kind::zero;
  const auto model = apm::market_from_drifts({0.0, 0.0, 0.0}, DistributionSpec::rademacher(), zero);
  const auto q = apm::build_tilted_measure(model);
  for (const auto& c : q.coordinates()) {
    EXPECT_EQ(c.a, 0.0);
    EXPECT_EQ(c.method, TiltMethod::logistic_tilt);
  }
  const auto s = apm::enumerate_scenarios(model);
  for (std::size_t r = 0; r < s.size(); ++r) EXPECT_EQ(q.density(s.row(r)), 1.0);
  const std::vector<double> w{-2.0, -1.0, 1.0, 2.0, 3.0};
  const auto report = apm::measure_moments(q, s, w);
  for (const auto& row : report.moments) {
    EXPECT_NEAR(row.density_moment.value, 1.0, 1e-15);
    EXPECT_NEAR(row.reciprocal_moment.value, 1.0, 1e-15);
  }
}

TEST(TiltedMeasure, TwoCoordinateExample) {
  const auto model = apm::market_from_drifts({0.2, 0.1}, DistributionSpec::rademacher());
  const auto q = apm::build_tilted_measure(model);
  ASSERT_EQ(q.size(), 2u);
  const auto c = q.coordinates();
  EXPECT_NEAR(c[0].a, -0.820, 1e-3);
  EXPECT_LT(std::abs(c[1].a), std::abs(c[0].a));
  EXPECT_LE(q.max_residual(), 1e-10);
  for (const auto& coord : c) {
    EXPECT_GT(coord.z, 0.5);
    EXPECT_LT(coord.z, 1.5);
  }

  // Density and moments against a hand-built product over the 4 scenarios.
  const double z1 = 0.5 * (psi(c[0].a * 0.8) + psi(-c[0].a * 1.2));
  const double z2 = 0.5 * (psi(c[1].a * 0.9) + psi(-c[1].a * 1.1));
  EXPECT_NEAR(c[0].z, z1, 1e-15);
  EXPECT_NEAR(c[1].z, z2, 1e-15);
  auto hand_density = [&](const std::vector<double>& e) {
    return psi(c[0].a * (e[0] - 0.2)) / z1 * psi(c[1].a * (e[1] - 0.1)) / z2;
  };
  const auto s = apm::enumerate_scenarios(model);
  for (std::size_t r = 0; r < s.size(); ++r) {
    const std::vector<double> e(s.row(r).begin(), s.row(r).end());
    EXPECT_NEAR(q.density(s.row(r)), hand_density(e), 1e-14);
    EXPECT_GT(q.density(s.row(r)), 0.0);
  }
  const std::vector<double> w{-2.0, 1.0, 2.0};
  const auto report = apm::measure_moments(q, s, w);
  for (const auto& row : report.moments) {
    const double expected = testing_support::rademacher_expectation(
        2, [&](const std::vector<double>& e) { return std::pow(hand_density(e), row.w); });
    const double expected_rec = testing_support::rademacher_expectation(
        2, [&](const std::vector<double>& e) { return std::pow(hand_density(e), -row.w); });
    EXPECT_NEAR(row.density_moment.value, expected, 1e-13);
    EXPECT_NEAR(row.reciprocal_moment.value, expected_rec, 1e-13);
    EXPECT_GT(row.density_moment.value, 0.0);
    EXPECT_NEAR(row.density_moment.value, apm::product_moment(q, model, row.w), 1e-13);
    EXPECT_LE(std::log(row.density_moment.value), report.fitted_c * report.tilt_energy + 1e-12);
    EXPECT_LE(std::log(row.reciprocal_moment.value), report.fitted_c * report.tilt_energy + 1e-12);
  }
  EXPECT_NEAR(report.moments[1].density_moment.value, 1.0, 1e-12);
  EXPECT_NEAR(report.tilt_energy,
              c[0].a * c[0].a + c[1].a * c[1].a + 0.04 + 0.01, 1e-14);
  EXPECT_FALSE(report.monte_carlo);
}

TEST(TiltedMeasure, FallbackCoordinatePricesExactly) {
  const auto model = apm::market_from_drifts({0.2, 0.6, -0.7}, DistributionSpec::rademacher());
  const auto q = apm::build_tilted_measure(model);
  const auto c = q.coordinates();
  EXPECT_EQ(c[0].method, TiltMethod::logistic_tilt);
  EXPECT_EQ(c[1].method, TiltMethod::meggy_fallback);
  EXPECT_EQ(c[2].method, TiltMethod::meggy_fallback);
  EXPECT_LE(q.max_residual(), 1e-10);
  const auto s = apm::enumerate_scenarios(model);
  const auto pricing = apm::verify_pricing(q, model, {}, s);
  EXPECT_LE(pricing.max_abs_residual, 1e-10);
  double mass = 0.0;
  for (std::size_t r = 0; r < s.size(); ++r) {
    EXPECT_GT(q.density(s.row(r)), 0.0);
    mass += s.weights()[r] * q.density(s.row(r));
  }
  EXPECT_NEAR(mass, 1.0, 1e-12);
  const auto report = apm::measure_moments(q, s, std::vector<double>{1.0});
  EXPECT_TRUE(std::isnan(report.tilt_ratios[1]));
}

TEST(TiltedMeasure, ArbitrageRejected) {
  const auto model = apm::market_from_drifts({0.2, 1.0}, DistributionSpec::rademacher());
  try {
    apm::build_tilted_measure(model);
    FAIL() << "expected ArbitrageError";
  } catch (const apm::ArbitrageError& e) {
    ASSERT_EQ(e.witness().size(), 2u);
    EXPECT_EQ(e.witness()[0], 0.0);
    EXPECT_NE(e.witness()[1], 0.0);
  }
}

TEST(TiltedMeasure, RandomMarketsNormalizedAndPriced) {
  Gen g(41);
  for (int t = 0; t < 20; ++t) {
    const auto model = apm::market_from_drifts(g.vector(4, -0.45, 0.45),
                                               DistributionSpec::standardized_two_point(g.uniform(0.2, 0.8)));
    const auto q = apm::build_tilted_measure(model);
    const auto s = apm::enumerate_scenarios(model);
    double mass = 0.0;
    double min_density = 1e300;
    for (std::size_t r = 0; r < s.size(); ++r) {
      mass += s.weights()[r] * q.density(s.row(r));
      min_density = std::min(min_density, q.density(s.row(r)));
    }
    EXPECT_NEAR(mass, 1.0, 1e-12);
    EXPECT_GT(min_density, 0.0);
    EXPECT_LE(q.max_residual(), 1e-10);
  }
}

TEST(TiltedMeasure, ContinuousNoiseResiduals) {
  const auto model = apm::market_from_drifts({0.3, -0.2, 0.1}, DistributionSpec::standard_normal());
  const auto q = apm::build_tilted_measure(model);
  EXPECT_LE(q.max_residual(), 1e-10);
  for (const auto& c : q.coordinates()) EXPECT_EQ(c.method, TiltMethod::logistic_tilt);
  EXPECT_NEAR(apm::product_moment(q, model, 1.0), 1.0, 1e-10);
}

TEST(TiltRatio, MonotoneInDrift) {
  std::vector<double> drifts{0.05, 0.1, 0.2, 0.4};
  std::vector<double> ratios;
  const auto law = DistributionSpec::rademacher().law();
  for (double b : drifts) {
    const auto up = apm::solve_tilt(law, b);
    const auto dn = apm::solve_tilt(law, -b);
    ASSERT_TRUE(up.converged && dn.converged);
    const double r = std::max(std::abs(up.a), std::abs(dn.a)) / b;
    EXPECT_TRUE(std::isfinite(r));
    ratios.push_back(r);
  }
  for (std::size_t i = 1; i < ratios.size(); ++i) EXPECT_GE(ratios[i], ratios[i - 1]);
  EXPECT_NEAR(ratios[0], 4.0035, 1e-3);

  const auto model = apm::market_from_drifts({0.05, -0.1, 0.2, -0.4}, DistributionSpec::rademacher());
  const auto report = apm::measure_moments(apm::build_tilted_measure(model),
                                           apm::enumerate_scenarios(model), std::vector<double>{2.0});
  ASSERT_EQ(report.tilt_ratios.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(report.tilt_ratios[i], ratios[i], 1e-9);
}

TEST(Pricing, AssetsBeyondFactors) {
  apm::ModelSpec spec;
  spec.m = 1;
  spec.K = 2;
  spec.mu = {0.1, 0.3};
  spec.beta = {{0.5}};
  spec.beta_bar = {1.0, 2.0};
  spec.noise = {DistributionSpec::rademacher(), DistributionSpec::standardized_two_point(0.3)};
  const auto model = apm::build_market(spec);
  const auto q = apm::build_tilted_measure(model);
  const auto s = apm::enumerate_scenarios(model);
  const std::vector<apm::FactorStrategy> strategies{{{0.0, 0.0}}, {{1.0, -2.0}}, {{-0.3, 0.7}}};
  const auto pricing = apm::verify_pricing(q, model, strategies, s);
  ASSERT_EQ(pricing.asset_residuals.size(), 2u);
  EXPECT_LE(std::abs(pricing.asset_residuals[0].value), 1.0 * 1e-10);
  EXPECT_LE(std::abs(pricing.asset_residuals[1].value), (0.5 + 2.0) * 1e-10);
  EXPECT_EQ(pricing.strategy_residuals[0].value, 0.0);
  EXPECT_LE(pricing.max_abs_residual, 1e-10);
  EXPECT_EQ(pricing.max_standard_errors, 0.0);
}

TEST(Pricing, MonteCarloWithinStandardErrors) {
  const auto model = apm::market_from_drifts({0.2, 0.1}, DistributionSpec::standard_normal());
  const auto q = apm::build_tilted_measure(model);
  const auto s = apm::sample_scenarios(model, 200'000, 12);
  const std::vector<apm::FactorStrategy> strategies{{{1.0, 1.0}}};
  const auto pricing = apm::verify_pricing(q, model, strategies, s);
  EXPECT_LT(pricing.max_standard_errors, 5.0);
  EXPECT_GT(pricing.asset_residuals[0].standard_error, 0.0);
}

TEST(SingleAssetMeasure, SkewedTwoPoint) {
  const auto x = ScalarLaw::discrete({-1.0, 1.0}, {0.36, 0.64});
  const auto w = apm::single_asset_measure(x, 0.5, std::vector<double>{2.0});
  EXPECT_NEAR(w.phi_star, 2.16049, 1e-5);
  // u' at phi* X is 0.5 below zero and 0.5 / sqrt(1 + phi*) = 0.28125 above.
  const double norm = 0.36 * 0.5 + 0.64 * 0.28125;
  EXPECT_NEAR(w.normalizer, norm, 1e-9);
  EXPECT_NEAR(w.density_at(1.0), 0.28125 / norm, 1e-8);
  EXPECT_NEAR(w.density_at(-1.0), 0.5 / norm, 1e-8);
  EXPECT_NEAR(0.64 * 0.28125 - 0.36 * 0.5, 0.0, 1e-15);
  EXPECT_LE(std::abs(w.mean_under_w), 1e-9);
  EXPECT_NEAR(w.density_bound, 0.5 / norm, 1e-12);
  for (double d : w.density) EXPECT_LE(d, w.density_bound + 1e-15);
  ASSERT_EQ(w.moments.size(), 1u);
  const double rec2 = 0.36 * std::pow(norm / 0.5, 2) + 0.64 * std::pow(norm / 0.28125, 2);
  EXPECT_NEAR(w.moments[0].reciprocal_moment.value, rec2, 1e-8);
}

TEST(SingleAssetMeasure, SymmetricIsIdentity) {
  const auto x = ScalarLaw::discrete({-1.0, 1.0}, {0.5, 0.5});
  for (double alpha : {0.3, 0.7}) {
    const auto w = apm::single_asset_measure(x, alpha);
    EXPECT_NEAR(w.phi_star, 0.0, 1e-10);
    for (double d : w.density) EXPECT_NEAR(d, 1.0, 1e-10);
  }
}

TEST(SingleAssetMeasure, ShiftedRademacher) {
  const auto x = ScalarLaw::discrete({-1.2, 0.8}, {0.5, 0.5});
  const auto w = apm::single_asset_measure(x, 0.5);
  EXPECT_NEAR(w.phi_star, -25.0 / 24.0, 1e-8);
  // u' at 0.8 phi* < 0 is alpha; at -1.2 phi* = 1.25 it is 0.5 / 1.5.
  const double norm = 0.5 * 0.5 + 0.5 / 3.0;
  EXPECT_NEAR(w.density_at(0.8), 0.5 / norm, 1e-8);
  EXPECT_NEAR(w.density_at(-1.2), (1.0 / 3.0) / norm, 1e-8);
  EXPECT_LE(std::abs(w.mean_under_w), 1e-9);
}

TEST(SingleAssetMeasure, RandomLawsAreBalancedAndBounded) {
  Gen g(61);
  for (int t = 0; t < 50; ++t) {
    const double lo = -g.uniform(0.1, 3.0);
    const double hi = g.uniform(0.1, 3.0);
    const double p = g.uniform(0.05, 0.95);
    const auto x = ScalarLaw::discrete({lo, 0.0, hi}, {p * 0.8, 0.2, (1 - p) * 0.8});
    const double alpha = g.uniform(0.1, 0.9);
    const auto w = apm::single_asset_measure(x, alpha);
    EXPECT_LE(std::abs(w.mean_under_w), 1e-9);
    for (double d : w.density) {
      EXPECT_GT(d, 0.0);
      EXPECT_LE(d, alpha / w.normalizer + 1e-12);
    }
  }
}

TEST(SingleAssetMeasure, OneSidedThrows) {
  EXPECT_THROW(apm::single_asset_measure(ScalarLaw::discrete({0.0, 1.0}, {0.5, 0.5}), 0.5),
               apm::NoInteriorMaximizerError);
}

}  // namespace
