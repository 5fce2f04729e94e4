#include <gtest/gtest.h>

#include <chrono>
#include <cmath>

#include "lpld/analytic.hpp"
#include "lpld/entropy_rate.hpp"
#include "lpld/maxent.hpp"
#include "lpld/quadrature.hpp"
#include "lpld/rng.hpp"

using namespace lpld;

namespace {
const PExponent kP2 = PExponent::finite(2);
const PExponent kQ1 = PExponent::finite(1);

quad::Options fine() {
  quad::Options o;
  o.abs_tol = 1e-13;
  o.rel_tol = 1e-12;
  return o;
}
}  // namespace

TEST(MaxEnt, SmallBetaIsScaledGeneralizedGaussian) {
  const auto s = solve_nu_star(kP2, kQ1, 0.5);
  EXPECT_EQ(s.regime, Regime::SmallBeta);
  EXPECT_NEAR(s.rate, 0.4189385, 1e-6);
  EXPECT_NEAR(s.params.kappa_q, 2.0, 1e-14);
  EXPECT_EQ(s.params.kappa_p, 0.0);
  EXPECT_LE(s.m_p_value, 1.0);
}

TEST(MaxEnt, LargeBetaIsMuP) {
  const auto s = solve_nu_star(kP2, kQ1, 0.9);
  EXPECT_EQ(s.regime, Regime::LargeBeta);
  EXPECT_NEAR(s.rate, 0.0, 1e-10);
}

TEST(MaxEnt, IntermediateKkt) {
  const auto s = solve_nu_star(kP2, kQ1, 0.75);
  EXPECT_EQ(s.regime, Regime::Intermediate);
  EXPECT_NEAR(s.m_p_value, 1.0, 1e-8);
  EXPECT_NEAR(s.m_q_value, 0.75, 1e-8);
  EXPECT_GT(s.params.kappa_p, 0.0);
  EXPECT_GT(s.params.kappa_q, 0.0);
  EXPECT_LT(std::abs(s.slackness_p()), 1e-8);
  EXPECT_LT(std::abs(s.slackness_q()), 1e-8);
  // Independent moment check on the returned density.
  const auto d = s.density();
  EXPECT_NEAR(moment(d, 2.0), 1.0, 1e-8);
  EXPECT_NEAR(moment(d, 1.0), 0.75, 1e-8);
  EXPECT_NEAR(s.params.kappa_p, 0.1702684941, 1e-8);
  EXPECT_NEAR(s.params.kappa_q, 0.8792840156, 1e-8);
}

TEST(MaxEnt, LagrangianPerturbationCertificate) {
  // h(nu) - kappa_p (m_p - 1) - kappa_q (m_q - beta) is concave with its maximum at nu*, so no
  // perturbation nu*(1 + t phi), int phi dnu* = 0, may increase it.
  for (double beta : {0.5, 0.75, 0.9}) {
    const auto s = solve_nu_star(kP2, kQ1, beta);
    const auto d = s.density();
    const double kp = s.regime == Regime::LargeBeta ? 0.5 : s.params.kappa_p;
    const double kq = s.params.kappa_q;
    const double cut = d.tail_cutoff();
    auto lagrangian = [&](const std::function<double(double)>& f) {
      auto integrand = [&](double x) {
        const double v = f(x);
        const double h = v > 0.0 ? -v * std::log(v) : 0.0;
        return h - kp * v * x * x - kq * v * std::abs(x);
      };
      return quad::integrate_even(integrand, cut, fine()).value + kp + kq * beta;
    };
    const double base = lagrangian([&](double x) { return d.pdf(x); });
    RngStream r(41, static_cast<std::uint64_t>(beta * 100));
    for (int k = 0; k < 50; ++k) {
      const double c = 2.5 * r.uniform();
      const double w = 0.1 + 0.6 * r.uniform();
      auto bump = [&](double x) {
        const double u = (std::abs(x) - c) / w;
        return std::abs(u) < 1.0 ? std::pow(std::cos(0.5 * std::numbers::pi * u), 2) : 0.0;
      };
      const double mean = quad::integrate_even([&](double x) { return bump(x) * d.pdf(x); }, cut, fine()).value;
      for (double t : {-0.3, 0.3}) {
        auto f = [&](double x) { return d.pdf(x) * (1.0 + t * (bump(x) - mean)); };
        EXPECT_LE(lagrangian(f), base + 1e-10) << "beta " << beta << " bump " << k;
      }
    }
  }
}

TEST(MaxEnt, GridSearchOracle) {
  // Best feasible member of exp(-a x^2 - b |x|) on a grid never beats the solver's entropy.
  const double beta = 0.75;
  const auto s = solve_nu_star(kP2, kQ1, beta);
  const double h_star = c_p(kP2) - s.rate;
  double best = -1e300;
  for (int i = 1; i <= 60; ++i) {
    for (int j = 0; j <= 60; ++j) {
      const double a = 0.01 * i, b = 0.03 * j;
      const auto d = AnalyticDensity::exp_family(a, b, 2, 1);
      if (moment(d, 2.0) > 1.0 || moment(d, 1.0) > beta) continue;
      best = std::max(best, quadrature_entropy(d));
    }
  }
  EXPECT_LE(best, h_star + 1e-10);
  EXPECT_GE(best, h_star - 5e-3);
}

TEST(MaxEnt, RateContinuousAcrossRegimes) {
  const auto t = thresholds(kP2, 1.0);
  for (double b : {t.beta_small, t.beta_large}) {
    const auto lo = solve_nu_star(kP2, kQ1, b * (1.0 - 1e-7));
    const auto hi = solve_nu_star(kP2, kQ1, b * (1.0 + 1e-7));
    EXPECT_NE(lo.regime, hi.regime);
    EXPECT_NEAR(lo.rate, hi.rate, 1e-6);
  }
}

TEST(MaxEnt, RateConvexAndNonincreasingInBeta) {
  std::vector<double> betas, rates;
  for (int i = 1; i <= 40; ++i) {
    betas.push_back(0.025 * i);
    rates.push_back(solve_nu_star(kP2, kQ1, betas.back()).rate);
  }
  for (std::size_t i = 1; i < rates.size(); ++i) EXPECT_LE(rates[i], rates[i - 1] + 1e-10) << betas[i];
  for (std::size_t i = 1; i + 1 < rates.size(); ++i)
    EXPECT_GE(rates[i - 1] - 2 * rates[i] + rates[i + 1], -1e-9) << betas[i];
}

TEST(MaxEnt, OtherExponents) {
  for (auto [p, q] : {std::pair{3.0, 1.0}, std::pair{4.0, 2.0}, std::pair{2.0, 1.5}}) {
    const auto t = thresholds(PExponent::finite(p), q);
    const double mid = 0.5 * (t.beta_small + t.beta_large);
    const auto s = solve_nu_star(PExponent::finite(p), PExponent::finite(q), mid);
    EXPECT_EQ(s.regime, Regime::Intermediate);
    EXPECT_NEAR(s.m_p_value, 1.0, 1e-8);
    EXPECT_NEAR(s.m_q_value, mid, 1e-8);
  }
}

TEST(MaxEnt, RuntimeUnderOneSecond) {
  const auto t0 = std::chrono::steady_clock::now();
  solve_nu_star(kP2, kQ1, 0.75);
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 1.0);
}

TEST(MaxEnt, InvalidArguments) {
  EXPECT_THROW(solve_nu_star(kQ1, kP2, 0.5), ConfigError);
  EXPECT_THROW(solve_nu_star(kP2, kQ1, -1.0), ConfigError);
  EXPECT_THROW(solve_nu_star(PExponent::infinity(), kQ1, 0.5), ConfigError);
}

TEST(MaxEnt, GeneralSolver) {
  const auto g = solve_maxent_general({{2.0, 1.0}}, {});
  EXPECT_NEAR(g.entropy, 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e), 1e-9);
  EXPECT_NEAR(g.equality_multipliers[0], 0.5, 1e-9);
  const auto two = solve_maxent_general({}, {{2.0, 1.0}, {1.0, 0.75}});
  const auto s = solve_nu_star(kP2, kQ1, 0.75);
  EXPECT_NEAR(two.inequality_multipliers[0], s.params.kappa_p, 1e-8);
  EXPECT_NEAR(two.inequality_multipliers[1], s.params.kappa_q, 1e-8);
  EXPECT_LT(two.max_slackness_residual({{2.0, 1.0}, {1.0, 0.75}}), 1e-8);
  // Slack inequality: only the p-constraint binds.
  const auto slack = solve_maxent_general({}, {{2.0, 1.0}, {1.0, 0.95}});
  EXPECT_NEAR(slack.inequality_multipliers[1], 0.0, 1e-12);
  EXPECT_THROW(solve_maxent_general({}, {}), UnboundedProblem);
  EXPECT_THROW(solve_maxent_general({}, {{2.0, -1.0}}), InfeasibleProblem);
}

TEST(MaxEnt, JsonFields) {
  const auto j = solve_nu_star(kP2, kQ1, 0.5).to_json();
  for (const char* k : {"p", "q", "beta", "regime", "kappa0", "kappa_p", "kappa_q", "m_p", "m_q", "rate"}) EXPECT_TRUE(j.contains(k)) << k;
  EXPECT_EQ(j["regime"], "SmallBeta");
}
