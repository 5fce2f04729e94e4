#pragma once

// Differential entropy, relative entropy against mu_p, the rate function H_p and the
// joint rate J(nu, c).

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "lpld/analytic.hpp"
#include "lpld/error.hpp"
#include "lpld/exponent.hpp"
#include "lpld/measures.hpp"
#include "lpld/quadrature.hpp"
#include "lpld/special.hpp"

namespace lpld {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Moments within this slack of a unit bound count as feasible.
inline constexpr double kMomentSlack = 1e-9;

/// The two routes to H_p must agree to this absolute tolerance.
inline constexpr double kRateIdentityTolerance = 1e-8;

/// log(2 p^{1/p} Gamma(1 + 1/p)) + 1/p, so that H_p(nu) = -h(nu) + c_p when m_p(nu) <= 1.
inline double c_p(PExponent p) {
  if (p.is_infinite()) return std::log(2.0);
  const double pv = p.value();
  return std::log(2.0) + std::log(pv) / pv + special::log_gamma(1.0 + 1.0 / pv) + 1.0 / pv;
}

/// m_r of a density, using closed forms where the family has one and quadrature otherwise.
inline double moment_exact(const AnalyticDensity& d, double r) {
  if (std::isinf(r)) return d.support_halfwidth();
  if (d.is<family::GeneralizedGaussian>()) return moment_scaled_gg(d.as<family::GeneralizedGaussian>().p, 1.0, r);
  if (d.is<family::ScaledGeneralizedGaussian>()) {
    const auto& f = d.as<family::ScaledGeneralizedGaussian>();
    return moment_scaled_gg(f.q, f.beta, r);
  }
  if (d.is<family::UniformSymmetric>()) return std::pow(d.as<family::UniformSymmetric>().halfwidth, r) / (r + 1.0);
  if (d.is<family::Mixture>()) {
    double s = 0.0;
    for (const auto& [w, part] : d.as<family::Mixture>().parts)
      if (w > 0.0) s += w * moment_exact(*part, r);
    return s;
  }
  return moment(d, r);
}

/// -int f log f by quadrature over the (symmetric) support.
inline double quadrature_entropy(const AnalyticDensity& d) {
  auto f = [&](double x) {
    const double lp = d.log_pdf(x);
    return std::isfinite(lp) ? -std::exp(lp) * lp : 0.0;
  };
  return quad::integrate_even(f, d.tail_cutoff()).value;
}

/// H(nu || mu_p) by quadrature of f log(f / mu_p); +inf when nu is not dominated by mu_p.
inline double relative_entropy_mu_p(const AnalyticDensity& d, PExponent p) {
  double cutoff = d.tail_cutoff();
  double log_ref_norm = 0.0;
  if (p.is_infinite()) {
    if (d.support_halfwidth() > 1.0) return kInfinity;
    cutoff = std::min(cutoff, 1.0);
    log_ref_norm = std::log(2.0);
  } else {
    log_ref_norm = std::log(2.0) + std::log(p.value()) / p.value() + special::log_gamma(1.0 + 1.0 / p.value());
  }
  const double pv = p.as_double();
  auto f = [&](double x) {
    const double lp = d.log_pdf(x);
    if (!std::isfinite(lp)) return 0.0;
    const double log_ref = (p.is_infinite() ? 0.0 : -std::pow(x, pv) / pv) - log_ref_norm;
    return std::exp(lp) * (lp - log_ref);
  };
  return quad::integrate_even(f, cutoff).value;
}

/// Value of H_p or J, with the pieces that make it up when finite.
struct RateValue {
  double value = 0.0;
  double relative_entropy = 0.0;
  double moment_penalty = 0.0;
  /// The same value via the -h + c_p identity (NaN when the rate is infinite).
  double identity_value = std::numeric_limits<double>::quiet_NaN();

  bool is_infinite() const { return std::isinf(value); }
  static RateValue infinite() { return {kInfinity, kInfinity, 0.0}; }
};

namespace detail {
inline double entropy_any(const AnalyticDensity& d) {
  try {
    return entropy_closed_form(d);
  } catch (const ConfigError&) {
    return quadrature_entropy(d);
  }
}
}  // namespace detail

/// J(nu, c) = H(nu||mu_p) + (1/p)(c - m_p(nu)) if m_p(nu) <= c, +inf otherwise.
/// Computed by direct quadrature and by the -h(nu) + c_p identity; these must agree.
inline RateValue rate_J(const AnalyticDensity& nu, double c, PExponent p) {
  detail::require(c >= 0.0, "rate_J: c must be nonnegative");
  const double mp = moment_exact(nu, p.as_double());
  if (mp > c + kMomentSlack) return RateValue::infinite();
  const double rel = relative_entropy_mu_p(nu, p);
  if (std::isinf(rel)) return RateValue::infinite();
  RateValue r;
  r.relative_entropy = rel;
  r.moment_penalty = p.reciprocal() * (c - std::min(mp, c));
  r.value = r.relative_entropy + r.moment_penalty;
  // -h + (1/p) m_p + log Z_p + (1/p)(c - m_p) = -h + c_p + (1/p)(c - 1)
  r.identity_value = -detail::entropy_any(nu) + c_p(p) + p.reciprocal() * (c - 1.0);
  if (!(std::abs(r.value - r.identity_value) <= kRateIdentityTolerance)) {
    throw NumericError("rate identity mismatch for " + nu.describe() + ": direct " + std::to_string(r.value) +
                       " vs identity " + std::to_string(r.identity_value));
  }
  return r;
}

/// H_p(nu) = J(nu, 1).
inline RateValue rate_Hp(const AnalyticDensity& nu, PExponent p) { return rate_J(nu, 1.0, p); }

/// Empirical measures are not absolutely continuous, so their relative entropy and rate are +inf.
inline RateValue rate_Hp(const EmpiricalMeasure&, PExponent) { return RateValue::infinite(); }

enum class EntropyMethod { Spacing, Histogram };

/// Differential entropy estimate from an equal-weight sample.
/// Spacing: Vasicek's m-spacing estimator with m = floor(sqrt(N)), each log-spacing centred by its
/// exact uniform-order-statistic expectation psi(k) - psi(N + 1) (boundary windows included).
/// Histogram: plug-in entropy on a Freedman-Diaconis histogram with the Miller-Madow correction.
inline double entropy_estimate(const EmpiricalMeasure& sample, EntropyMethod method) {
  detail::require(sample.has_uniform_weights(), "entropy_estimate: resample weighted measures to uniform weights first");
  const auto x = sample.atoms();
  const std::size_t n = x.size();
  const double nd = static_cast<double>(n);
  if (method == EntropyMethod::Spacing) {
    detail::require(n >= 100, "entropy_estimate: spacing method needs at least 100 atoms");
    const std::size_t m = static_cast<std::size_t>(std::floor(std::sqrt(nd)));
    const double psi_n1 = special::digamma(nd + 1.0);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t hi = std::min(i + m, n - 1);
      const std::size_t lo = i >= m ? i - m : 0;
      const double gap = x[hi] - x[lo];
      if (!(gap > 0.0)) throw NumericError("entropy_estimate: zero spacing (tied atoms)");
      sum += std::log(gap) - special::digamma(static_cast<double>(hi - lo)) + psi_n1;
    }
    return sum / nd;
  }
  detail::require(n >= 2, "entropy_estimate: histogram method needs at least 2 atoms");
  auto quantile = [&](double u) {
    const double pos = u * (nd - 1.0);
    const auto k = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(k);
    return k + 1 < n ? x[k] * (1.0 - frac) + x[k + 1] * frac : x[k];
  };
  const double iqr = quantile(0.75) - quantile(0.25);
  if (!(iqr > 0.0)) throw NumericError("entropy_estimate: zero interquartile range");
  const double width = 2.0 * iqr / std::cbrt(nd);
  const auto bins = static_cast<std::size_t>(std::ceil((x.back() - x.front()) / width)) + 1;
  std::vector<std::size_t> counts(bins, 0);
  for (double v : x) counts[std::min(bins - 1, static_cast<std::size_t>((v - x.front()) / width))]++;
  double h = 0.0;
  std::size_t occupied = 0;
  for (auto c : counts) {
    if (c == 0) continue;
    ++occupied;
    const double pk = static_cast<double>(c) / nd;
    h -= pk * std::log(pk);
  }
  return h + std::log(width) + (static_cast<double>(occupied) - 1.0) / (2.0 * nd);
}

inline EntropyMethod parse_entropy_method(const std::string& s) {
  if (s == "spacing") return EntropyMethod::Spacing;
  if (s == "histogram") return EntropyMethod::Histogram;
  throw ConfigError("unknown entropy method '" + s + "'");
}

}  // namespace lpld
