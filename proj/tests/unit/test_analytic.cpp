#include <gtest/gtest.h>

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>

#include "lpld/analytic.hpp"
#include "lpld/entropy_rate.hpp"
#include "lpld/quadrature.hpp"

using namespace lpld;

TEST(Analytic, MomentsOfMuP) {
  EXPECT_NEAR(moment_mu_p(PExponent::finite(2), 2), 1.0, 1e-14);
  EXPECT_NEAR(moment_mu_p(PExponent::finite(2), 1), std::sqrt(2.0 / std::numbers::pi), 1e-14);
  EXPECT_NEAR(moment_mu_p(PExponent::finite(1), 1), 1.0, 1e-14);
  // m_p(mu_p) = 1 for every p.
  for (double p : {1.0, 1.5, 3.0, 7.0}) EXPECT_NEAR(moment_mu_p(PExponent::finite(p), p), 1.0, 1e-13) << p;
  EXPECT_THROW(moment_mu_p(PExponent::infinity(), 1.0), ConfigError);
}

TEST(Analytic, ScaledMomentsMatchQuadrature) {
  for (double q : {1.0, 1.5, 2.0}) {
    for (double beta : {0.3, 0.5, 1.2}) {
      const auto d = AnalyticDensity::scaled_generalized_gaussian(q, beta);
      for (double r : {1.0, 2.0, 3.5}) {
        const auto num = quad::integrate_even([&](double x) { return std::pow(x, r) * d.pdf(x); }, d.tail_cutoff());
        EXPECT_NEAR(moment_scaled_gg(q, beta, r), num.value, 1e-10) << q << " " << beta << " " << r;
      }
      // m_q(mu_{q,beta}) = beta.
      EXPECT_NEAR(moment_scaled_gg(q, beta, q), beta, 1e-13);
    }
  }
}

TEST(Analytic, Thresholds21) {
  const auto t = thresholds(PExponent::finite(2), 1.0);
  EXPECT_NEAR(t.beta_small, 0.7071067811865476, 1e-12);
  EXPECT_NEAR(t.beta_large, 0.7978845608028654, 1e-12);
  EXPECT_NEAR(moment_p_of_scaled(2, 1, t.beta_small), 1.0, 1e-12);
  EXPECT_THROW(thresholds(PExponent::finite(2), 2.0), ConfigError);
  EXPECT_THROW(thresholds(PExponent::infinity(), 1.0), ConfigError);
}

TEST(Analytic, DensitiesNormalize) {
  const std::vector<AnalyticDensity> ds = {
      AnalyticDensity::generalized_gaussian(1.0),  AnalyticDensity::generalized_gaussian(2.0),
      AnalyticDensity::generalized_gaussian(3.5),  AnalyticDensity::scaled_generalized_gaussian(1.0, 0.5),
      AnalyticDensity::exp_family(0.2, 0.9, 2, 1), AnalyticDensity::mixture(0.3, AnalyticDensity::generalized_gaussian(2.0),
                                                                            AnalyticDensity::uniform(0.5))};
  for (const auto& d : ds) {
    const double mass = quad::integrate_even([&](double x) { return d.pdf(x); }, d.tail_cutoff()).value;
    EXPECT_NEAR(mass, 1.0, 1e-10) << d.describe();
  }
}

TEST(Analytic, CdfAndQuantile) {
  const auto g = AnalyticDensity::generalized_gaussian(2.0);
  EXPECT_NEAR(g.cdf(1.959963984540054), 0.975, 1e-9);
  EXPECT_NEAR(g.cdf(0.0), 0.5, 1e-15);
  for (double p : {1.0, 1.5, 3.0}) {
    for (double y : {-2.0, -0.3, 0.7, 2.5}) {
      const double oracle = 0.5 + std::copysign(0.5, y) * boost::math::gamma_p(1.0 / p, std::pow(std::abs(y), p) / p);
      EXPECT_NEAR(cdf_mu_p(PExponent::finite(p), y), oracle, 1e-12) << p << " " << y;
      EXPECT_NEAR(AnalyticDensity::generalized_gaussian(p).cdf(y), oracle, 1e-12) << p << " " << y;
    }
  }
  EXPECT_NEAR(cdf_mu_p(PExponent::infinity(), 0.5), 0.75, 1e-15);
  EXPECT_DOUBLE_EQ(cdf_mu_p(PExponent::infinity(), 2.0), 1.0);
  const auto e = AnalyticDensity::exp_family(0.17, 0.88, 2, 1);
  for (double u : {0.01, 0.2, 0.5, 0.77, 0.999}) EXPECT_NEAR(e.cdf(e.quantile(u)), u, 1e-10) << u;
  // CDF table agrees with direct quadrature of the pdf.
  const double direct = quad::integrate([&](double x) { return e.pdf(x); }, -e.tail_cutoff(), 0.8).value;
  EXPECT_NEAR(e.cdf(0.8), direct, 1e-10);
}

TEST(Analytic, ClosedFormEntropy) {
  EXPECT_NEAR(entropy_closed_form(AnalyticDensity::generalized_gaussian(2.0)), 0.5 * std::log(2 * std::numbers::pi * std::numbers::e), 1e-13);
  EXPECT_NEAR(entropy_closed_form(AnalyticDensity::uniform(1.0)), std::log(2.0), 1e-15);
  for (double q : {1.0, 2.5}) {
    const auto d = AnalyticDensity::scaled_generalized_gaussian(q, 0.7);
    EXPECT_NEAR(entropy_closed_form(d), quadrature_entropy(d), 1e-10);
  }
}

TEST(Analytic, InfinityIsUniform) {
  const auto u = AnalyticDensity::generalized_gaussian(PExponent::infinity());
  EXPECT_TRUE(u.is<family::UniformSymmetric>());
  EXPECT_NEAR(u.pdf(0.3), 0.5, 1e-15);
  EXPECT_EQ(u.pdf(1.5), 0.0);
}

TEST(Analytic, InvalidParameters) {
  EXPECT_THROW(AnalyticDensity::generalized_gaussian(0.5), ConfigError);
  EXPECT_THROW(AnalyticDensity::scaled_generalized_gaussian(1.0, -1.0), ConfigError);
  EXPECT_THROW(AnalyticDensity::exp_family(-0.1, 0.0, 2, 1), ConfigError);
  EXPECT_THROW(PExponent::parse("abc"), ConfigError);
  EXPECT_TRUE(PExponent::parse("inf").is_infinite());
  EXPECT_EQ(PExponent::parse("2.5").value(), 2.5);
}
