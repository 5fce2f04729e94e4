#pragma once

// Closed-form densities on the line and the exact formulas built on them:
// generalized-Gaussian moments, regime thresholds, entropies and CDFs.

#include <algorithm>
#include <cmath>
#include <type_traits>
#include <limits>
#include <memory>
#include <numbers>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "lpld/error.hpp"
#include "lpld/exponent.hpp"
#include "lpld/quadrature.hpp"
#include "lpld/special.hpp"

namespace lpld {

class AnalyticDensity;

namespace family {
/// exp(-|y|^p/p) normalized. For p = inf use UniformSymmetric{1}.
struct GeneralizedGaussian {
  double p;
};
/// exp(-|x|^q/(beta q)) normalized; beta = 1 recovers GeneralizedGaussian(q).
struct ScaledGeneralizedGaussian {
  double q;
  double beta;
};
/// exp(-1 - kappa0 - kappa_p|x|^p - kappa_q|x|^q).
struct ExpFamily {
  double kappa0;
  double kappa_p;
  double kappa_q;
  double p;
  double q;
};
struct UniformSymmetric {
  double halfwidth;
};
struct Mixture {
  std::vector<std::pair<double, std::shared_ptr<const AnalyticDensity>>> parts;
};
}  // namespace family

namespace detail {
// Energy threshold beyond which the truncated tail is below e^{-80} of the peak.
inline constexpr double kTailEnergy = 80.0;

// Cumulative half-line mass on a uniform grid over [0, cutoff]; makes CDF evaluation of
// families without a closed-form CDF cost one short quadrature instead of a full one.
struct CdfTable {
  double cutoff = 0.0;
  double step = 0.0;
  std::vector<double> cumulative;  // cumulative[j] = int_0^{j*step} pdf
};

inline double log_norm_scaled_gg(double q, double beta) {
  return std::log(2.0) + std::log(beta * q) / q + special::log_gamma(1.0 + 1.0 / q);
}
}  // namespace detail

/// A symmetric probability density on the real line. Every family here is even about 0.
class AnalyticDensity {
 public:
  using Family = std::variant<family::GeneralizedGaussian, family::ScaledGeneralizedGaussian, family::ExpFamily,
                              family::UniformSymmetric, family::Mixture>;

  /// mu_p; p = inf gives the uniform density on [-1, 1].
  static AnalyticDensity generalized_gaussian(PExponent p) {
    if (p.is_infinite()) return uniform(1.0);
    return AnalyticDensity(family::GeneralizedGaussian{p.value()}, detail::log_norm_scaled_gg(p.value(), 1.0));
  }
  static AnalyticDensity generalized_gaussian(double p) { return generalized_gaussian(PExponent::finite(p)); }

  static AnalyticDensity scaled_generalized_gaussian(double q, double beta) {
    detail::require(q >= 1.0 && std::isfinite(q), "scaled generalized Gaussian needs finite q >= 1");
    detail::require(beta > 0.0 && std::isfinite(beta), "scaled generalized Gaussian needs beta > 0");
    return AnalyticDensity(family::ScaledGeneralizedGaussian{q, beta}, detail::log_norm_scaled_gg(q, beta));
  }

  static AnalyticDensity uniform(double halfwidth) {
    detail::require(halfwidth > 0.0 && std::isfinite(halfwidth), "uniform density needs a positive halfwidth");
    return AnalyticDensity(family::UniformSymmetric{halfwidth}, std::log(2.0 * halfwidth));
  }

  /// Exponential family member with kappa0 fixed by normalization (computed by quadrature).
  static AnalyticDensity exp_family(double kappa_p, double kappa_q, double p, double q);
  /// Exponential family member with a caller-supplied kappa0 (assumed to normalize).
  static AnalyticDensity exp_family(double kappa0, double kappa_p, double kappa_q, double p, double q) {
    check_exp_family(kappa_p, kappa_q, p, q);
    AnalyticDensity d(family::ExpFamily{kappa0, kappa_p, kappa_q, p, q}, 1.0 + kappa0);
    d.build_cdf_table();
    return d;
  }

  /// weight * a + (1 - weight) * b.
  static AnalyticDensity mixture(double weight, const AnalyticDensity& a, const AnalyticDensity& b) {
    detail::require(weight >= 0.0 && weight <= 1.0, "mixture weight must lie in [0, 1]");
    family::Mixture m;
    m.parts.emplace_back(weight, std::make_shared<const AnalyticDensity>(a));
    m.parts.emplace_back(1.0 - weight, std::make_shared<const AnalyticDensity>(b));
    return AnalyticDensity(std::move(m), 0.0);
  }

  const Family& family() const { return family_; }
  template <class T>
  bool is() const {
    return std::holds_alternative<T>(family_);
  }
  template <class T>
  const T& as() const {
    return std::get<T>(family_);
  }

  /// log of the normalizing constant; undefined (0) for mixtures.
  double log_normalizer() const { return log_norm_; }

  double log_pdf(double x) const;
  double pdf(double x) const { return std::exp(log_pdf(x)); }
  double cdf(double x) const;
  double quantile(double u) const;

  /// Halfwidth of the support; +inf for densities with unbounded support.
  double support_halfwidth() const;
  /// Integration cutoff: tails beyond it carry less than e^{-80} relative density.
  double tail_cutoff() const;

  std::string describe() const;

 private:
  AnalyticDensity(Family f, double log_norm) : family_(std::move(f)), log_norm_(log_norm) {}

  static void check_exp_family(double kappa_p, double kappa_q, double p, double q) {
    detail::require(p >= 1.0 && q >= 1.0 && std::isfinite(p) && std::isfinite(q), "exp family exponents must be finite >= 1");
    detail::require(kappa_p >= 0.0 && kappa_q >= 0.0, "exp family multipliers must be nonnegative");
    detail::require(kappa_p > 0.0 || kappa_q > 0.0, "exp family with zero multipliers is not normalizable");
  }

  double energy(double x) const;
  void build_cdf_table();

  Family family_;
  double log_norm_;
  std::shared_ptr<const detail::CdfTable> table_;
};

// ---------------------------------------------------------------------------------------------
// Exact formulas

/// m_r(mu_{q,beta}) = (beta q)^{r/q} Gamma((r+1)/q) / Gamma(1/q).
inline double moment_scaled_gg(double q, double beta, double r) {
  return std::exp((r / q) * std::log(beta * q) + special::log_gamma((r + 1.0) / q) - special::log_gamma(1.0 / q));
}

/// m_q(mu_p) = p^{q/p} Gamma((q+1)/p) / Gamma(1/p). Rejects p = inf (use 1/(q+1)).
inline double moment_mu_p(PExponent p, double q) {
  if (p.is_infinite()) throw ConfigError("moment_mu_p: p = inf has the uniform moment 1/(q+1); call it directly");
  detail::require(q >= 1.0 && std::isfinite(q), "moment_mu_p: q must be finite and >= 1");
  return moment_scaled_gg(p.value(), 1.0, q);
}

/// m_p(mu_{q,beta}) = beta^{p/q} q^{p/q} Gamma((p+1)/q) / Gamma(1/q).
inline double moment_p_of_scaled(double p, double q, double beta) { return moment_scaled_gg(q, beta, p); }

struct RegimeThresholds {
  /// Largest beta with m_p(mu_{q,beta}) <= 1.
  double beta_small;
  /// m_q(mu_p): above it the q-moment constraint is not binding.
  double beta_large;
};

inline RegimeThresholds thresholds(PExponent p, double q) {
  if (p.is_infinite()) throw ConfigError("thresholds: no small-beta threshold exists for p = inf");
  const double pv = p.value();
  detail::require(q >= 1.0 && q < pv, "thresholds: requires 1 <= q < p");
  const double small =
      (1.0 / q) * std::exp((q / pv) * (special::log_gamma(1.0 / q) - special::log_gamma((pv + 1.0) / q)));
  return {small, moment_mu_p(p, q)};
}

/// Differential entropy for families with a closed form.
inline double entropy_closed_form(const AnalyticDensity& d) {
  if (d.is<family::GeneralizedGaussian>()) {
    const double p = d.as<family::GeneralizedGaussian>().p;
    return d.log_normalizer() + 1.0 / p;
  }
  if (d.is<family::ScaledGeneralizedGaussian>()) {
    return d.log_normalizer() + 1.0 / d.as<family::ScaledGeneralizedGaussian>().q;
  }
  if (d.is<family::UniformSymmetric>()) return d.log_normalizer();
  if (d.is<family::ExpFamily>()) {
    const auto& e = d.as<family::ExpFamily>();
    if (e.kappa_p == 0.0) return entropy_closed_form(AnalyticDensity::scaled_generalized_gaussian(e.q, 1.0 / (e.kappa_q * e.q)));
    if (e.kappa_q == 0.0) return entropy_closed_form(AnalyticDensity::scaled_generalized_gaussian(e.p, 1.0 / (e.kappa_p * e.p)));
  }
  throw ConfigError("entropy_closed_form: no closed form for " + d.describe());
}

/// CDF of mu_p: 1/2 + sign(y) P(1/p, |y|^p/p) / 2, uniform on [-1, 1] for p = inf.
inline double cdf_mu_p(PExponent p, double y) {
  if (p.is_infinite()) return std::clamp((y + 1.0) / 2.0, 0.0, 1.0);
  const double pv = p.value();
  if (y == 0.0) return 0.5;
  const double a = std::abs(y);
  const double tail = 0.5 * special::gamma_q(1.0 / pv, std::pow(a, pv) / pv);
  return y > 0.0 ? 1.0 - tail : tail;
}

// ---------------------------------------------------------------------------------------------
// AnalyticDensity implementation

inline double AnalyticDensity::energy(double x) const {
  const double a = std::abs(x);
  return std::visit(
      [a](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, family::GeneralizedGaussian>) {
          return std::pow(a, f.p) / f.p;
        } else if constexpr (std::is_same_v<T, family::ScaledGeneralizedGaussian>) {
          return std::pow(a, f.q) / (f.beta * f.q);
        } else if constexpr (std::is_same_v<T, family::ExpFamily>) {
          double e = 0.0;
          if (f.kappa_p != 0.0) e += f.kappa_p * std::pow(a, f.p);
          if (f.kappa_q != 0.0) e += f.kappa_q * std::pow(a, f.q);
          return e;
        } else if constexpr (std::is_same_v<T, family::UniformSymmetric>) {
          return a <= f.halfwidth ? 0.0 : std::numeric_limits<double>::infinity();
        } else {
          return 0.0;
        }
      },
      family_);
}

inline double AnalyticDensity::log_pdf(double x) const {
  if (const auto* m = std::get_if<family::Mixture>(&family_)) {
    double s = 0.0;
    for (const auto& [w, d] : m->parts)
      if (w > 0.0) s += w * d->pdf(x);
    return std::log(s);
  }
  return -energy(x) - log_norm_;
}

inline double AnalyticDensity::support_halfwidth() const {
  if (const auto* u = std::get_if<family::UniformSymmetric>(&family_)) return u->halfwidth;
  if (const auto* m = std::get_if<family::Mixture>(&family_)) {
    double h = 0.0;
    for (const auto& [w, d] : m->parts)
      if (w > 0.0) h = std::max(h, d->support_halfwidth());
    return h;
  }
  return std::numeric_limits<double>::infinity();
}

inline double AnalyticDensity::tail_cutoff() const {
  using detail::kTailEnergy;
  return std::visit(
      [this](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, family::GeneralizedGaussian>) {
          return std::pow(kTailEnergy * f.p, 1.0 / f.p);
        } else if constexpr (std::is_same_v<T, family::ScaledGeneralizedGaussian>) {
          return std::pow(kTailEnergy * f.beta * f.q, 1.0 / f.q);
        } else if constexpr (std::is_same_v<T, family::ExpFamily>) {
          double x = std::numeric_limits<double>::infinity();
          if (f.kappa_p > 0.0) x = std::min(x, std::pow(kTailEnergy / f.kappa_p, 1.0 / f.p));
          if (f.kappa_q > 0.0) x = std::min(x, std::pow(kTailEnergy / f.kappa_q, 1.0 / f.q));
          return x;
        } else if constexpr (std::is_same_v<T, family::UniformSymmetric>) {
          return f.halfwidth;
        } else {
          double x = 0.0;
          for (const auto& [w, d] : f.parts)
            if (w > 0.0) x = std::max(x, d->tail_cutoff());
          (void)this;
          return x;
        }
      },
      family_);
}

inline double AnalyticDensity::cdf(double x) const {
  if (x == 0.0) return 0.5;
  return std::visit(
      [this, x](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        const double a = std::abs(x);
        double tail;  // mass of (a, inf)
        if constexpr (std::is_same_v<T, family::GeneralizedGaussian>) {
          tail = 0.5 * special::gamma_q(1.0 / f.p, std::pow(a, f.p) / f.p);
        } else if constexpr (std::is_same_v<T, family::ScaledGeneralizedGaussian>) {
          tail = 0.5 * special::gamma_q(1.0 / f.q, std::pow(a, f.q) / (f.beta * f.q));
        } else if constexpr (std::is_same_v<T, family::UniformSymmetric>) {
          tail = a >= f.halfwidth ? 0.0 : 0.5 * (1.0 - a / f.halfwidth);
        } else if constexpr (std::is_same_v<T, family::ExpFamily>) {
          const auto& t = *table_;
          if (a >= t.cutoff) {
            tail = 0.0;
          } else {
            const auto j = std::min(static_cast<std::size_t>(a / t.step), t.cumulative.size() - 2);
            auto pdf_fn = [this](double s) { return pdf(s); };
            const double partial = quad::integrate(pdf_fn, j * t.step, a).value;
            tail = (t.cumulative.back() - t.cumulative[j]) - partial;
            tail = std::max(tail, 0.0);
          }
        } else {
          double c = 0.0;
          for (const auto& [w, d] : f.parts)
            if (w > 0.0) c += w * d->cdf(x);
          return c;
        }
        return x > 0.0 ? 1.0 - tail : tail;
      },
      family_);
}

inline double AnalyticDensity::quantile(double u) const {
  detail::require(u > 0.0 && u < 1.0, "quantile: u must lie in (0, 1)");
  if (u == 0.5) return 0.0;
  if (const auto* uf = std::get_if<family::UniformSymmetric>(&family_)) return (2.0 * u - 1.0) * uf->halfwidth;
  // Symmetric: solve for the upper quantile and reflect.
  const double target = u > 0.5 ? u : 1.0 - u;
  double lo = 0.0;
  double hi = 1.0;
  const double support = support_halfwidth();
  while (cdf(hi) < target && hi < support) hi = std::min(2.0 * hi, support);
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double fx = cdf(x) - target;
    if (fx > 0.0)
      hi = x;
    else
      lo = x;
    const double dens = pdf(x);
    double next = dens > 0.0 ? x - fx / dens : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-15 * std::max(1.0, x) || hi - lo <= 1e-15 * std::max(1.0, hi)) {
      x = next;
      break;
    }
    x = next;
  }
  return u > 0.5 ? x : -x;
}

inline std::string AnalyticDensity::describe() const {
  char buf[160];
  std::visit(
      [&buf](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, family::GeneralizedGaussian>) {
          std::snprintf(buf, sizeof buf, "GeneralizedGaussian(p=%g)", f.p);
        } else if constexpr (std::is_same_v<T, family::ScaledGeneralizedGaussian>) {
          std::snprintf(buf, sizeof buf, "ScaledGeneralizedGaussian(q=%g, beta=%g)", f.q, f.beta);
        } else if constexpr (std::is_same_v<T, family::ExpFamily>) {
          std::snprintf(buf, sizeof buf, "ExpFamily(kappa0=%g, kappa_p=%g, kappa_q=%g, p=%g, q=%g)", f.kappa0, f.kappa_p,
                        f.kappa_q, f.p, f.q);
        } else if constexpr (std::is_same_v<T, family::UniformSymmetric>) {
          std::snprintf(buf, sizeof buf, "UniformSymmetric(halfwidth=%g)", f.halfwidth);
        } else {
          std::snprintf(buf, sizeof buf, "Mixture(%zu parts)", f.parts.size());
        }
      },
      family_);
  return buf;
}

inline AnalyticDensity AnalyticDensity::exp_family(double kappa_p, double kappa_q, double p, double q) {
  check_exp_family(kappa_p, kappa_q, p, q);
  // Provisional member with log-normalizer 0, then fix kappa0 from its mass.
  AnalyticDensity raw(family::ExpFamily{-1.0, kappa_p, kappa_q, p, q}, 0.0);
  auto f = [&raw](double x) { return std::exp(-raw.energy(x)); };
  const double mass = quad::integrate_even(f, raw.tail_cutoff()).value;
  const double log_z = std::log(mass);
  AnalyticDensity d(family::ExpFamily{log_z - 1.0, kappa_p, kappa_q, p, q}, log_z);
  d.build_cdf_table();
  return d;
}

inline void AnalyticDensity::build_cdf_table() {
  constexpr std::size_t cells = 512;
  auto t = std::make_shared<detail::CdfTable>();
  t->cutoff = tail_cutoff();
  t->step = t->cutoff / cells;
  t->cumulative.assign(cells + 1, 0.0);
  auto pdf_fn = [this](double s) { return pdf(s); };
  for (std::size_t j = 0; j < cells; ++j)
    t->cumulative[j + 1] = t->cumulative[j] + quad::integrate(pdf_fn, j * t->step, (j + 1) * t->step).value;
  table_ = std::move(t);
}

}  // namespace lpld
