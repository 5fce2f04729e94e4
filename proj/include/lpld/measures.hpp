#pragma once

// Probability measures on the line: weighted empirical measures, moment maps, the
// scaling map G_p, one-dimensional Wasserstein-q and Kolmogorov-Smirnov distances.

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "lpld/analytic.hpp"
#include "lpld/error.hpp"
#include "lpld/exponent.hpp"
#include "lpld/quadrature.hpp"
#include "lpld/rng.hpp"
#include "lpld/sampling.hpp"

namespace lpld {

/// Finitely many weighted atoms on the line, sorted ascending, weights summing to 1.
class EmpiricalMeasure {
 public:
  static EmpiricalMeasure uniform(std::vector<double> atoms) {
    detail::require(!atoms.empty(), "empirical measure needs at least one atom");
    std::sort(atoms.begin(), atoms.end());
    const double w = 1.0 / static_cast<double>(atoms.size());
    EmpiricalMeasure m;
    m.weights_.assign(atoms.size(), w);
    m.atoms_ = std::move(atoms);
    m.uniform_ = true;
    return m;
  }

  /// Weights need only be positive; they are normalized to sum to 1.
  static EmpiricalMeasure weighted(std::span<const double> atoms, std::span<const double> weights) {
    detail::require(!atoms.empty() && atoms.size() == weights.size(), "atoms and weights must be nonempty and aligned");
    std::vector<std::size_t> order(atoms.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return atoms[a] < atoms[b]; });
    double total = 0.0;
    for (double w : weights) {
      detail::require(w > 0.0 && std::isfinite(w), "empirical weights must be positive and finite");
      total += w;
    }
    EmpiricalMeasure m;
    m.atoms_.reserve(atoms.size());
    m.weights_.reserve(atoms.size());
    for (auto i : order) {
      m.atoms_.push_back(atoms[i]);
      m.weights_.push_back(weights[i] / total);
    }
    m.uniform_ = std::all_of(weights.begin(), weights.end(), [&](double w) { return w == weights[0]; });
    return m;
  }

  static EmpiricalMeasure dirac(double atom) { return uniform({atom}); }

  std::span<const double> atoms() const { return atoms_; }
  std::span<const double> weights() const { return weights_; }
  std::size_t size() const { return atoms_.size(); }
  bool has_uniform_weights() const { return uniform_; }

  /// Equal-weight measure of `count` atoms drawn by systematic resampling.
  EmpiricalMeasure resampled_uniform(std::size_t count, RngStream& rng) const {
    if (uniform_ && count == size()) return *this;
    const auto idx = systematic_resample(weights_, count, rng);
    std::vector<double> a;
    a.reserve(count);
    for (auto k : idx) a.push_back(atoms_[k]);
    return uniform(std::move(a));
  }

 private:
  std::vector<double> atoms_;
  std::vector<double> weights_;
  bool uniform_ = true;
};

/// Closed interval [lo, hi], 0 <= lo <= hi; hi may be +inf.
struct Interval {
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();

  static Interval make(double lo, double hi) {
    detail::require(lo >= 0.0 && hi >= lo, "interval needs 0 <= lo <= hi");
    return {lo, hi};
  }
  bool contains(double x) const { return x >= lo && x <= hi; }
  bool has_interior() const { return hi > lo; }
};

/// (1/n) sum delta_{n^{1/p} x_i}. The importance weight of x does not enter.
inline EmpiricalMeasure empirical_from_sphere(const SpherePoint& x) {
  const double scale = std::pow(static_cast<double>(x.dimension()), x.p.reciprocal());
  std::vector<double> atoms(x.coords);
  for (auto& a : atoms) a *= scale;
  return EmpiricalMeasure::uniform(std::move(atoms));
}

/// sum w_i |a_i|^r for r in [0, inf); max |a_i| for r = inf.
inline double moment(const EmpiricalMeasure& nu, double r) {
  const auto a = nu.atoms();
  const auto w = nu.weights();
  if (std::isinf(r)) return std::max(std::abs(a.front()), std::abs(a.back()));
  detail::require(r >= 0.0, "moment order must be nonnegative");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = std::abs(a[i]);
    s += w[i] * (r == 1.0 ? x : r == 2.0 ? x * x : std::pow(x, r));
  }
  return s;
}
inline double moment(const EmpiricalMeasure& nu, PExponent q) { return moment(nu, q.as_double()); }

/// Quadrature moment of a density; +inf for r = inf on unbounded support.
inline double moment(const AnalyticDensity& nu, double r) {
  if (std::isinf(r)) return nu.support_halfwidth();
  detail::require(r >= 0.0, "moment order must be nonnegative");
  auto f = [&](double x) { return std::pow(x, r) * nu.pdf(x); };
  return quad::integrate_even(f, nu.tail_cutoff()).value;
}
inline double moment(const AnalyticDensity& nu, PExponent q) { return moment(nu, q.as_double()); }

/// G_p(nu, c): atoms divided by c^{1/p} (identity for p = inf).
inline EmpiricalMeasure scale_map_G(const EmpiricalMeasure& nu, double c, PExponent p) {
  detail::require(c > 0.0 && std::isfinite(c), "scale_map_G: c must be positive");
  const double s = std::pow(c, p.reciprocal());
  std::vector<double> a(nu.atoms().begin(), nu.atoms().end());
  for (auto& x : a) x /= s;
  return EmpiricalMeasure::weighted(a, nu.weights());
}

/// alpha * a + (1 - alpha) * b; components with zero mass are dropped.
inline EmpiricalMeasure mix(double alpha, const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  detail::require(alpha >= 0.0 && alpha <= 1.0, "mixture weight must lie in [0, 1]");
  if (alpha == 1.0) return a;
  if (alpha == 0.0) return b;
  std::vector<double> atoms;
  std::vector<double> weights;
  for (std::size_t i = 0; i < a.size(); ++i) {
    atoms.push_back(a.atoms()[i]);
    weights.push_back(alpha * a.weights()[i]);
  }
  for (std::size_t i = 0; i < b.size(); ++i) {
    atoms.push_back(b.atoms()[i]);
    weights.push_back((1.0 - alpha) * b.weights()[i]);
  }
  return EmpiricalMeasure::weighted(atoms, weights);
}

/// Exact one-dimensional W_q between two empirical measures by matching quantile functions.
inline double wasserstein_q(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double q) {
  detail::require(q >= 1.0 && std::isfinite(q), "wasserstein_q: q must be finite and >= 1");
  const auto a = mu.atoms();
  const auto wa = mu.weights();
  const auto b = nu.atoms();
  const auto wb = nu.weights();
  std::size_t i = 0;
  std::size_t j = 0;
  double ra = wa[0];
  double rb = wb[0];
  double cost = 0.0;
  while (i < a.size() && j < b.size()) {
    const double m = std::min(ra, rb);
    cost += m * std::pow(std::abs(a[i] - b[j]), q);
    ra -= m;
    rb -= m;
    // Leftover mass below rounding noise is treated as exhausted.
    if (ra <= 1e-15) {
      if (++i < a.size()) ra += wa[i];
    }
    if (rb <= 1e-15) {
      if (++j < b.size()) rb += wb[j];
    }
  }
  return std::pow(cost, 1.0 / q);
}

/// W_q between an empirical measure and a density, by midpoint quadrature over a 2^14 quantile grid.
inline double wasserstein_q(const EmpiricalMeasure& mu, const AnalyticDensity& nu, double q, std::size_t grid = 1u << 14) {
  detail::require(q >= 1.0 && std::isfinite(q), "wasserstein_q: q must be finite and >= 1");
  detail::require(std::isfinite(moment(nu, q)), "wasserstein_q: density has infinite q-th moment");
  const auto a = mu.atoms();
  const auto w = mu.weights();
  std::size_t i = 0;
  double cum = w[0];
  double cost = 0.0;
  const double h = 1.0 / static_cast<double>(grid);
  for (std::size_t k = 0; k < grid; ++k) {
    const double u = (static_cast<double>(k) + 0.5) * h;
    while (u > cum && i + 1 < a.size()) cum += w[++i];
    cost += std::pow(std::abs(a[i] - nu.quantile(u)), q);
  }
  return std::pow(cost * h, 1.0 / q);
}

/// sup |F_mu - F_nu| with F_nu continuous, checked on both sides of every jump of F_mu.
inline double ks_distance(const EmpiricalMeasure& mu, const AnalyticDensity& nu) {
  const auto a = mu.atoms();
  const auto w = mu.weights();
  double before = 0.0;
  double d = 0.0;
  for (std::size_t i = 0; i < a.size();) {
    double after = before;
    std::size_t k = i;
    while (k < a.size() && a[k] == a[i]) after += w[k++];
    const double f = nu.cdf(a[i]);
    d = std::max({d, std::abs(f - before), std::abs(f - std::min(after, 1.0))});
    before = after;
    i = k;
  }
  return d;
}

/// Two-sample sup |F_mu - F_nu|.
inline double ks_distance(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  const auto a = mu.atoms();
  const auto wa = mu.weights();
  const auto b = nu.atoms();
  const auto wb = nu.weights();
  std::size_t i = 0;
  std::size_t j = 0;
  double fa = 0.0;
  double fb = 0.0;
  double d = 0.0;
  while (i < a.size() || j < b.size()) {
    const double x = (j >= b.size() || (i < a.size() && a[i] <= b[j])) ? a[i] : b[j];
    while (i < a.size() && a[i] == x) fa += wa[i++];
    while (j < b.size() && b[j] == x) fb += wb[j++];
    d = std::max(d, std::abs(fa - fb));
  }
  return d;
}

/// CSV with header "atom,weight", one row per atom, 17 significant digits.
inline void write_csv(std::ostream& os, const EmpiricalMeasure& nu) {
  os << "atom,weight\n";
  char buf[64];
  for (std::size_t i = 0; i < nu.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", nu.atoms()[i], nu.weights()[i]);
    os << buf;
  }
}

inline EmpiricalMeasure read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("atom,weight", 0) != 0) throw ConfigError("empirical CSV must start with 'atom,weight'");
  std::vector<double> atoms;
  std::vector<double> weights;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ConfigError("malformed empirical CSV row: " + line);
    atoms.push_back(std::stod(line.substr(0, comma)));
    weights.push_back(std::stod(line.substr(comma + 1)));
  }
  return EmpiricalMeasure::weighted(atoms, weights);
}

}  // namespace lpld
