#pragma once

// Maximum-entropy densities under power-moment constraints, and the constrained optimizer
// nu* of the conditional limit problem: maximize h(nu) s.t. m_p(nu) <= 1, m_q(nu) <= beta.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lpld/analytic.hpp"
#include "lpld/entropy_rate.hpp"
#include "lpld/error.hpp"
#include "lpld/exponent.hpp"
#include "lpld/quadrature.hpp"

namespace lpld {

namespace detail {

// Moments of the unnormalized even density exp(-sum theta_k |x|^{r_k}).
struct PowerFamilyMoments {
  double log_z = std::numeric_limits<double>::infinity();
  std::vector<double> mean;              // E |x|^{r_k}
  std::vector<std::vector<double>> cov;  // Cov(|x|^{r_k}, |x|^{r_l})
  bool normalizable() const { return std::isfinite(log_z); }
};

inline bool power_family_normalizable(const std::vector<double>& theta, const std::vector<double>& powers) {
  double top = -1.0;
  double coef = 0.0;
  for (std::size_t k = 0; k < powers.size(); ++k) {
    if (theta[k] == 0.0) continue;
    if (powers[k] > top) {
      top = powers[k];
      coef = theta[k];
    } else if (powers[k] == top) {
      coef += theta[k];
    }
  }
  return top > 0.0 && coef > 0.0;
}

inline PowerFamilyMoments power_family_moments(const std::vector<double>& theta, const std::vector<double>& powers) {
  PowerFamilyMoments out;
  const std::size_t k = powers.size();
  if (!power_family_normalizable(theta, powers)) return out;
  auto energy = [&](double x) {
    double e = 0.0;
    for (std::size_t i = 0; i < k; ++i)
      if (theta[i] != 0.0) e += theta[i] * std::pow(x, powers[i]);
    return e;
  };
  // Grow the window until the energy has risen 80 above its minimum seen so far.
  double e_min = energy(0.0);
  double cutoff = 1.0;
  for (int guard = 0; guard < 200; ++guard) {
    for (int j = 1; j <= 256; ++j) e_min = std::min(e_min, energy(cutoff * j / 256.0));
    if (energy(cutoff) - e_min >= 80.0) break;
    cutoff *= 2.0;
  }
  quad::Options opt;
  opt.initial_pieces = 32;
  auto integral = [&](double extra_power) {
    auto f = [&](double x) {
      const double w = std::exp(-(energy(x) - e_min));
      return extra_power == 0.0 ? w : std::pow(x, extra_power) * w;
    };
    return quad::integrate(f, 0.0, cutoff, opt).value;
  };
  const double z = integral(0.0);
  out.log_z = std::log(2.0 * z) - e_min;
  out.mean.resize(k);
  for (std::size_t i = 0; i < k; ++i) out.mean[i] = integral(powers[i]) / z;
  out.cov.assign(k, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i; j < k; ++j) {
      const double c = integral(powers[i] + powers[j]) / z - out.mean[i] * out.mean[j];
      out.cov[i][j] = c;
      out.cov[j][i] = c;
    }
  return out;
}

// Small dense solve with partial pivoting; returns nullopt when singular.
inline std::optional<std::vector<double>> solve_linear(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    if (!(std::abs(a[piv][c]) > 1e-300)) return std::nullopt;
    std::swap(a[piv], a[c]);
    std::swap(b[piv], b[c]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t j = c; j < n; ++j) a[r][j] -= f * a[c][j];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= a[i][j] * x[j];
    x[i] = s / a[i][i];
  }
  return x;
}

struct DualResult {
  std::vector<double> theta;
  PowerFamilyMoments moments;
  double gradient_norm = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

// Damped Newton on the convex dual D(theta) = log Z(theta) + <theta, target>, whose gradient
// is target - E|x|^r and Hessian the covariance. Coordinates flagged in `nonnegative` are
// projected onto [0, inf) after each step.
inline DualResult newton_dual(std::vector<double> theta, const std::vector<double>& powers,
                              const std::vector<double>& target, const std::vector<bool>& nonnegative,
                              double tolerance = 1e-11, int max_iter = 200) {
  const std::size_t k = powers.size();
  auto objective = [&](const PowerFamilyMoments& m, const std::vector<double>& th) {
    double v = m.log_z;
    for (std::size_t i = 0; i < k; ++i) v += th[i] * target[i];
    return v;
  };
  DualResult res;
  auto mom = power_family_moments(theta, powers);
  if (!mom.normalizable()) throw ConfigError("newton_dual: starting point is not normalizable");
  double value = objective(mom, theta);
  for (int it = 0; it < max_iter; ++it) {
    std::vector<double> grad(k);
    double gnorm = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      grad[i] = target[i] - mom.mean[i];
      // A pinned coordinate at its bound with an outward gradient is optimal in that direction.
      const bool pinned = nonnegative[i] && theta[i] == 0.0 && grad[i] > 0.0;
      if (!pinned) gnorm = std::max(gnorm, std::abs(grad[i]));
    }
    res.gradient_norm = gnorm;
    res.iterations = it;
    if (gnorm < tolerance) {
      res.converged = true;
      break;
    }
    // Newton direction on the free coordinates.
    std::vector<std::size_t> free;
    for (std::size_t i = 0; i < k; ++i)
      if (!(nonnegative[i] && theta[i] == 0.0 && grad[i] > 0.0)) free.push_back(i);
    std::vector<std::vector<double>> h(free.size(), std::vector<double>(free.size()));
    std::vector<double> rhs(free.size());
    for (std::size_t a = 0; a < free.size(); ++a) {
      rhs[a] = -grad[free[a]];
      for (std::size_t b = 0; b < free.size(); ++b) h[a][b] = mom.cov[free[a]][free[b]];
    }
    auto dir_free = solve_linear(h, rhs);
    std::vector<double> dir(k, 0.0);
    if (dir_free) {
      for (std::size_t a = 0; a < free.size(); ++a) dir[free[a]] = (*dir_free)[a];
    } else {
      for (auto i : free) dir[i] = -grad[i];
    }
    double step = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls, step *= 0.5) {
      std::vector<double> trial(k);
      double decrease = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        trial[i] = theta[i] + step * dir[i];
        if (nonnegative[i]) trial[i] = std::max(trial[i], 0.0);
        decrease += grad[i] * (trial[i] - theta[i]);
      }
      auto tm = power_family_moments(trial, powers);
      if (!tm.normalizable()) continue;
      const double tv = objective(tm, trial);
      if (tv <= value + 1e-4 * decrease || (std::abs(tv - value) <= 1e-15 * std::max(1.0, std::abs(value)) && ls > 30)) {
        theta = std::move(trial);
        mom = std::move(tm);
        value = tv;
        moved = true;
        break;
      }
    }
    if (!moved) break;
    const double size = std::accumulate(theta.begin(), theta.end(), 0.0, [](double s, double t) { return std::max(s, std::abs(t)); });
    if (!(size < 1e12)) break;  // iterates escaping: dual unbounded below
  }
  res.theta = std::move(theta);
  res.moments = std::move(mom);
  if (!res.converged) {
    double gnorm = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double g = target[i] - res.moments.mean[i];
      if (!(nonnegative[i] && res.theta[i] == 0.0 && g > 0.0)) gnorm = std::max(gnorm, std::abs(g));
    }
    res.gradient_norm = gnorm;
    res.converged = gnorm < tolerance;
  }
  return res;
}

}  // namespace detail

/// Multipliers of exp(-1 - kappa0 - kappa_p|x|^p - kappa_q|x|^q).
struct ExpFamilyParams {
  double kappa0 = 0.0;
  double kappa_p = 0.0;
  double kappa_q = 0.0;
  double p = 2.0;
  double q = 1.0;

  AnalyticDensity density() const { return AnalyticDensity::exp_family(kappa0, kappa_p, kappa_q, p, q); }
};

enum class Regime { SmallBeta, LargeBeta, Intermediate };

inline std::string to_string(Regime r) {
  switch (r) {
    case Regime::SmallBeta: return "SmallBeta";
    case Regime::LargeBeta: return "LargeBeta";
    case Regime::Intermediate: return "Intermediate";
  }
  return "?";
}

struct MaxEntSolution {
  ExpFamilyParams params;
  Regime regime = Regime::SmallBeta;
  double beta = 0.0;
  double m_p_value = 0.0;
  double m_q_value = 0.0;
  double rate = 0.0;
  double dual_gradient_norm = 0.0;
  int iterations = 0;

  /// kappa_p (m_p - 1).
  double slackness_p() const { return params.kappa_p * (m_p_value - 1.0); }
  /// kappa_q (m_q - beta).
  double slackness_q() const { return params.kappa_q * (m_q_value - beta); }

  /// The optimizer as a density. In the two closed-form regimes this is the generalized-Gaussian member itself.
  AnalyticDensity density() const {
    if (regime == Regime::SmallBeta) return AnalyticDensity::scaled_generalized_gaussian(params.q, beta);
    if (regime == Regime::LargeBeta) return AnalyticDensity::generalized_gaussian(params.p);
    return params.density();
  }

  nlohmann::json to_json() const {
    return {{"p", params.p},           {"q", params.q},           {"beta", beta},
            {"regime", to_string(regime)}, {"kappa0", params.kappa0}, {"kappa_p", params.kappa_p},
            {"kappa_q", params.kappa_q}, {"m_p", m_p_value},        {"m_q", m_q_value},
            {"rate", rate}};
  }
};

/// nu* = argmax { h(nu) : m_p(nu) <= 1, m_q(nu) in [0, beta] }, with its regime and rate H_p(nu*).
inline MaxEntSolution solve_nu_star(PExponent p, PExponent q, double beta) {
  if (p.is_infinite()) throw ConfigError("solve_nu_star: p = inf has no small-beta regime (m_inf of mu_{q,beta} is infinite)");
  if (q.is_infinite()) throw ConfigError("solve_nu_star: q must be finite");
  detail::require(q < p, "solve_nu_star: requires q < p");
  detail::require(beta > 0.0 && std::isfinite(beta), "solve_nu_star: beta must be positive");
  const double pv = p.value();
  const double qv = q.value();
  const auto t = thresholds(p, qv);

  MaxEntSolution s;
  s.beta = beta;
  s.params.p = pv;
  s.params.q = qv;
  if (beta <= t.beta_small) {
    s.regime = Regime::SmallBeta;
    s.params.kappa_q = 1.0 / (beta * qv);
    s.params.kappa_p = 0.0;
    s.params.kappa0 = detail::log_norm_scaled_gg(qv, beta) - 1.0;
    s.m_p_value = moment_p_of_scaled(pv, qv, beta);
    s.m_q_value = beta;
  } else if (beta >= t.beta_large) {
    s.regime = Regime::LargeBeta;
    s.params.kappa_p = 1.0 / pv;
    s.params.kappa_q = 0.0;
    s.params.kappa0 = detail::log_norm_scaled_gg(pv, 1.0) - 1.0;
    s.m_p_value = 1.0;
    s.m_q_value = t.beta_large;
  } else {
    s.regime = Regime::Intermediate;
    const std::vector<double> powers = {pv, qv};
    const std::vector<double> target = {1.0, beta};
    auto res = detail::newton_dual({0.0, 1.0 / (beta * qv)}, powers, target, {true, true});
    if (!res.converged) throw NumericError("solve_nu_star: dual Newton did not converge (gradient " + std::to_string(res.gradient_norm) + ")");
    s.params.kappa_p = res.theta[0];
    s.params.kappa_q = res.theta[1];
    s.params.kappa0 = res.moments.log_z - 1.0;
    s.m_p_value = res.moments.mean[0];
    s.m_q_value = res.moments.mean[1];
    s.dual_gradient_norm = res.gradient_norm;
    s.iterations = res.iterations;
  }
  s.rate = rate_Hp(s.density(), p).value;
  return s;
}

/// A constraint int |x|^power dnu (=, <=) bound.
struct PowerConstraint {
  double power;
  double bound;
};

/// exp(-1 - kappa0 - sum_i lambda_i |x|^{r_i} - sum_j mu_j |x|^{s_j}).
struct MaxEntGeneralSolution {
  double kappa0 = 0.0;
  std::vector<double> equality_multipliers;
  std::vector<double> inequality_multipliers;
  std::vector<double> equality_moments;
  std::vector<double> inequality_moments;
  double entropy = 0.0;
  double dual_gradient_norm = 0.0;

  /// Largest |mu_j (m_{s_j} - beta_j)|.
  double max_slackness_residual(const std::vector<PowerConstraint>& inequalities) const {
    double r = 0.0;
    for (std::size_t j = 0; j < inequalities.size(); ++j)
      r = std::max(r, std::abs(inequality_multipliers[j] * (inequality_moments[j] - inequalities[j].bound)));
    return r;
  }

  /// The two-term exponential-family form, when the solution has one.
  ExpFamilyParams as_exp_family(double p, double q) const;
};

/// Maximize h(nu) over densities with the given power-moment equalities and inequalities.
/// Active sets are enumerated; the returned point satisfies the KKT conditions (nonnegative
/// inequality multipliers, primal feasibility, complementary slackness).
inline MaxEntGeneralSolution solve_maxent_general(const std::vector<PowerConstraint>& equalities,
                                                  const std::vector<PowerConstraint>& inequalities) {
  if (equalities.empty() && inequalities.empty())
    throw UnboundedProblem("solve_maxent_general: no constraints, entropy is unbounded on the line");
  for (const auto& c : equalities) {
    detail::require(c.power > 0.0 && std::isfinite(c.power), "constraint powers must be positive and finite");
    if (!(c.bound > 0.0)) throw InfeasibleProblem("equality on a positive moment with nonpositive value");
  }
  for (const auto& c : inequalities) {
    detail::require(c.power > 0.0 && std::isfinite(c.power), "constraint powers must be positive and finite");
    if (!(c.bound > 0.0)) throw InfeasibleProblem("inequality bounds a positive moment by a nonpositive value");
  }
  detail::require(inequalities.size() <= 12, "solve_maxent_general: too many inequalities");
  const std::size_t m = inequalities.size();
  for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
    std::vector<double> powers;
    std::vector<double> target;
    std::vector<bool> nonneg;
    std::vector<double> theta;
    for (const auto& c : equalities) {
      powers.push_back(c.power);
      target.push_back(c.bound);
      nonneg.push_back(false);
    }
    std::vector<std::size_t> active;
    for (std::size_t j = 0; j < m; ++j)
      if (mask & (std::size_t{1} << j)) {
        active.push_back(j);
        powers.push_back(inequalities[j].power);
        target.push_back(inequalities[j].bound);
        nonneg.push_back(true);
      }
    if (powers.empty()) continue;
    // Start from the generalized Gaussian matching the highest-power constraint.
    const auto top = std::max_element(powers.begin(), powers.end()) - powers.begin();
    theta.assign(powers.size(), 0.0);
    theta[top] = 1.0 / (target[top] * powers[top]);
    detail::DualResult res;
    try {
      res = detail::newton_dual(theta, powers, target, nonneg);
    } catch (const ConfigError&) {
      continue;
    }
    if (!res.converged) continue;
    // KKT: active multipliers strictly usable, inactive constraints satisfied.
    MaxEntGeneralSolution sol;
    sol.kappa0 = res.moments.log_z - 1.0;
    sol.dual_gradient_norm = res.gradient_norm;
    sol.equality_multipliers.assign(res.theta.begin(), res.theta.begin() + static_cast<long>(equalities.size()));
    sol.equality_moments.assign(res.moments.mean.begin(), res.moments.mean.begin() + static_cast<long>(equalities.size()));
    sol.inequality_multipliers.assign(m, 0.0);
    sol.inequality_moments.assign(m, 0.0);
    for (std::size_t a = 0; a < active.size(); ++a) sol.inequality_multipliers[active[a]] = res.theta[equalities.size() + a];
    // Inactive moments evaluated at the candidate.
    std::vector<double> all_powers = powers;
    std::vector<double> all_theta = res.theta;
    for (std::size_t j = 0; j < m; ++j)
      if (!(mask & (std::size_t{1} << j))) {
        all_powers.push_back(inequalities[j].power);
        all_theta.push_back(0.0);
      }
    const auto full = detail::power_family_moments(all_theta, all_powers);
    bool feasible = true;
    std::size_t extra = powers.size();
    for (std::size_t j = 0; j < m; ++j) {
      if (mask & (std::size_t{1} << j)) {
        const auto a = static_cast<std::size_t>(std::find(active.begin(), active.end(), j) - active.begin());
        sol.inequality_moments[j] = res.moments.mean[equalities.size() + a];
      } else {
        sol.inequality_moments[j] = full.mean[extra++];
        if (sol.inequality_moments[j] > inequalities[j].bound + kMomentSlack) feasible = false;
      }
    }
    if (!feasible) continue;
    double h = 1.0 + sol.kappa0;
    for (std::size_t i = 0; i < res.theta.size(); ++i) h += res.theta[i] * res.moments.mean[i];
    sol.entropy = h;
    return sol;
  }
  throw InfeasibleProblem("solve_maxent_general: no feasible maximum-entropy density for these constraints");
}

inline ExpFamilyParams MaxEntGeneralSolution::as_exp_family(double p, double q) const {
  if (!equality_multipliers.empty() || inequality_multipliers.size() != 2)
    throw ConfigError("as_exp_family: needs exactly two inequality constraints (p then q)");
  return {kappa0, inequality_multipliers[0], inequality_multipliers[1], p, q};
}

}  // namespace lpld
