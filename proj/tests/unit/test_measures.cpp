#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lpld/analytic.hpp"
#include "lpld/measures.hpp"
#include "lpld/rng.hpp"

using namespace lpld;

namespace {
double brute_force_wq(std::vector<double> a, const std::vector<double>& b, double q) {
  std::sort(a.begin(), a.end());
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) c += std::pow(std::abs(a[i] - b[i]), q);
    best = std::min(best, c / static_cast<double>(a.size()));
  } while (std::next_permutation(a.begin(), a.end()));
  return std::pow(best, 1.0 / q);
}
}  // namespace

TEST(Measures, WassersteinMatchesPermutationOracle) {
  RngStream r(21, 0);
  for (std::size_t n = 1; n <= 8; ++n) {
    for (double q : {1.0, 1.5, 2.0, 3.0}) {
      std::vector<double> a(n), b(n);
      for (auto& v : a) v = r.normal();
      for (auto& v : b) v = 2.0 * r.uniform() - 0.5;
      EXPECT_NEAR(wasserstein_q(EmpiricalMeasure::uniform(a), EmpiricalMeasure::uniform(b), q), brute_force_wq(a, b, q), 1e-12)
          << n << " " << q;
    }
  }
}

TEST(Measures, WassersteinWeightedAndAnalytic) {
  const auto d0 = EmpiricalMeasure::dirac(0.0);
  const auto two = EmpiricalMeasure::weighted(std::vector<double>{-1.0, 3.0}, std::vector<double>{0.25, 0.75});
  EXPECT_NEAR(wasserstein_q(two, d0, 1.0), 0.25 + 2.25, 1e-14);
  EXPECT_NEAR(wasserstein_q(two, d0, 2.0), std::sqrt(0.25 + 6.75), 1e-14);
  // W_1(delta_0, mu_2) = E|Y| and W_2 = sqrt(E Y^2).
  const auto g = AnalyticDensity::generalized_gaussian(2.0);
  EXPECT_NEAR(wasserstein_q(d0, g, 1.0), std::sqrt(2.0 / std::numbers::pi), 1e-4);
  EXPECT_NEAR(wasserstein_q(d0, g, 2.0), 1.0, 1e-3);
}

TEST(Measures, CounterexampleMomentVersusWasserstein) {
  // nu_n = (1 - 1/n) delta_0 + (1/n) delta_sqrt(n) keeps m_2 = 1 while W_1(nu_n, delta_0) = n^{-1/2}.
  for (std::size_t n : {4u, 100u, 400u, 10000u}) {
    const double nd = static_cast<double>(n);
    const auto nu = mix(1.0 - 1.0 / nd, EmpiricalMeasure::dirac(0.0), EmpiricalMeasure::dirac(std::sqrt(nd)));
    EXPECT_NEAR(moment(nu, 2.0), 1.0, 1e-12);
    EXPECT_NEAR(wasserstein_q(nu, EmpiricalMeasure::dirac(0.0), 1.0), 1.0 / std::sqrt(nd), 1e-12);
    EXPECT_NEAR(wasserstein_q(nu, EmpiricalMeasure::dirac(0.0), 2.0), 1.0, 1e-12);
  }
}

TEST(Measures, KolmogorovSmirnov) {
  const auto a = EmpiricalMeasure::uniform({0.0, 1.0, 2.0, 3.0});
  const auto b = EmpiricalMeasure::uniform({0.5, 1.5, 2.5, 3.5});
  EXPECT_NEAR(ks_distance(a, b), 0.25, 1e-15);
  EXPECT_NEAR(ks_distance(a, a), 0.0, 1e-15);
  // Single atom at 0 against a symmetric law: the jump straddles 1/2.
  EXPECT_NEAR(ks_distance(EmpiricalMeasure::dirac(0.0), AnalyticDensity::generalized_gaussian(2.0)), 0.5, 1e-15);
}

TEST(Measures, MomentsAndScaleMap) {
  const auto nu = EmpiricalMeasure::uniform({-2.0, 1.0, 1.0});
  EXPECT_NEAR(moment(nu, 2.0), 2.0, 1e-15);
  EXPECT_NEAR(moment(nu, PExponent::infinity()), 2.0, 1e-15);
  EXPECT_NEAR(moment(nu, 0.0), 1.0, 1e-15);
  // G(nu, m_p(nu)) has unit p-th moment.
  const auto g = scale_map_G(nu, moment(nu, 3.0), PExponent::finite(3));
  EXPECT_NEAR(moment(g, 3.0), 1.0, 1e-14);
  EXPECT_THROW(scale_map_G(nu, 0.0, PExponent::finite(3)), ConfigError);
}

TEST(Measures, CsvRoundTrip) {
  const auto nu = EmpiricalMeasure::weighted(std::vector<double>{0.1, -3.25, 1e-17}, std::vector<double>{1.0, 2.0, 3.0});
  std::stringstream ss;
  write_csv(ss, nu);
  const auto back = read_csv(ss);
  ASSERT_EQ(back.size(), nu.size());
  for (std::size_t i = 0; i < nu.size(); ++i) {
    EXPECT_EQ(back.atoms()[i], nu.atoms()[i]);
    EXPECT_DOUBLE_EQ(back.weights()[i], nu.weights()[i]);
  }
  std::stringstream bad("x,y\n1,2\n");
  EXPECT_THROW(read_csv(bad), ConfigError);
}

TEST(Measures, InvalidInputs) {
  EXPECT_THROW(EmpiricalMeasure::uniform({}), ConfigError);
  EXPECT_THROW(EmpiricalMeasure::weighted(std::vector<double>{1.0}, std::vector<double>{-1.0}), ConfigError);
  EXPECT_THROW(Interval::make(1.0, 0.5), ConfigError);
  EXPECT_THROW(mix(1.5, EmpiricalMeasure::dirac(0), EmpiricalMeasure::dirac(1)), ConfigError);
}
