#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "lpld/analytic.hpp"
#include "lpld/entropy_rate.hpp"
#include "lpld/maxent.hpp"
#include "lpld/rng.hpp"
#include "lpld/sampling.hpp"

using namespace lpld;

namespace {
std::vector<AnalyticDensity> battery() {
  // Twelve densities with m_2 <= 1 (p = 2 is used throughout).
  return {AnalyticDensity::generalized_gaussian(2.0),
          AnalyticDensity::scaled_generalized_gaussian(1.0, 0.5),
          AnalyticDensity::scaled_generalized_gaussian(1.0, 0.3),
          AnalyticDensity::scaled_generalized_gaussian(1.5, 0.4),
          AnalyticDensity::scaled_generalized_gaussian(3.0, 0.2),
          AnalyticDensity::uniform(1.0),
          AnalyticDensity::uniform(std::sqrt(3.0)),
          solve_nu_star(PExponent::finite(2), PExponent::finite(1), 0.75).density(),
          AnalyticDensity::exp_family(1.0, 0.5, 2, 1),
          AnalyticDensity::generalized_gaussian(4.0),
          AnalyticDensity::mixture(0.5, AnalyticDensity::scaled_generalized_gaussian(2.0, 0.25), AnalyticDensity::uniform(0.5)),
          AnalyticDensity::mixture(0.2, AnalyticDensity::generalized_gaussian(2.0), AnalyticDensity::scaled_generalized_gaussian(1.0, 0.2))};
}
}  // namespace

TEST(EntropyRate, ConstantCp) {
  EXPECT_NEAR(c_p(PExponent::finite(2)), 0.5 * std::log(2.0 * std::numbers::pi) + 0.5, 1e-14);
  EXPECT_NEAR(c_p(PExponent::finite(1)), std::log(2.0) + 1.0, 1e-14);
  EXPECT_NEAR(c_p(PExponent::infinity()), std::log(2.0), 1e-15);
  // c_p -> log 2 as p -> inf.
  EXPECT_NEAR(c_p(PExponent::finite(1e9)), std::log(2.0), 1e-7);
}

TEST(EntropyRate, IdentityHoldsOnBattery) {
  const auto p = PExponent::finite(2);
  for (const auto& d : battery()) {
    ASSERT_LE(moment_exact(d, 2.0), 1.0 + 1e-12) << d.describe();
    const auto r = rate_Hp(d, p);
    EXPECT_NEAR(r.value, r.identity_value, 1e-8) << d.describe();
    EXPECT_GE(r.value, -1e-12) << d.describe();
  }
}

TEST(EntropyRate, KnownValues) {
  const auto p = PExponent::finite(2);
  EXPECT_NEAR(rate_Hp(AnalyticDensity::generalized_gaussian(2.0), p).value, 0.0, 1e-12);
  EXPECT_NEAR(rate_Hp(AnalyticDensity::scaled_generalized_gaussian(1.0, 0.5), p).value, 0.4189385332046727, 1e-10);
  // J(nu, c) = H_p(nu) + (c - 1)/p.
  const auto d = AnalyticDensity::scaled_generalized_gaussian(1.0, 0.5);
  EXPECT_NEAR(rate_J(d, 2.0, p).value - rate_Hp(d, p).value, 0.5, 1e-10);
}

TEST(EntropyRate, InfiniteCases) {
  const auto p = PExponent::finite(2);
  // Moment constraint violated.
  EXPECT_TRUE(rate_Hp(AnalyticDensity::scaled_generalized_gaussian(2.0, 1.5), p).is_infinite());
  // Not dominated by the uniform reference.
  EXPECT_TRUE(rate_Hp(AnalyticDensity::generalized_gaussian(2.0), PExponent::infinity()).is_infinite());
  EXPECT_NEAR(rate_Hp(AnalyticDensity::uniform(0.5), PExponent::infinity()).value, std::log(2.0), 1e-10);
  EXPECT_TRUE(rate_Hp(EmpiricalMeasure::dirac(0.0), p).is_infinite());
}

TEST(EntropyRate, EstimatorsRecoverClosedForm) {
  for (double pv : {1.0, 2.0, 3.0}) {
    RngStream r(31, 0);
    const auto xs = sample_gen_gaussian(PExponent::finite(pv), 50000, r);
    const auto e = EmpiricalMeasure::uniform(xs);
    const double truth = entropy_closed_form(AnalyticDensity::generalized_gaussian(pv));
    EXPECT_NEAR(entropy_estimate(e, EntropyMethod::Spacing), truth, 0.02) << pv;
    EXPECT_NEAR(entropy_estimate(e, EntropyMethod::Histogram), truth, 0.02) << pv;
  }
}

TEST(EntropyRate, EstimatorPreconditions) {
  EXPECT_THROW(entropy_estimate(EmpiricalMeasure::uniform({0.0, 1.0, 2.0}), EntropyMethod::Spacing), ConfigError);
  const auto w = EmpiricalMeasure::weighted(std::vector<double>{0.0, 1.0}, std::vector<double>{1.0, 2.0});
  EXPECT_THROW(entropy_estimate(w, EntropyMethod::Histogram), ConfigError);
  EXPECT_THROW(parse_entropy_method("knn"), ConfigError);
}
