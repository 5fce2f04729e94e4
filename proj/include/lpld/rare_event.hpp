#pragma once

// Monte Carlo for the rare event {m_q(L_{n,p}) in C}: direct and importance-sampling
// probability estimates, a restricted random-walk Metropolis chain for conditional
// laws, and finite-dimensional marginals of sphere points.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lpld/analytic.hpp"
#include "lpld/entropy_rate.hpp"
#include "lpld/error.hpp"
#include "lpld/exponent.hpp"
#include "lpld/maxent.hpp"
#include "lpld/measures.hpp"
#include "lpld/rng.hpp"
#include "lpld/sampling.hpp"

namespace lpld {

/// m_q of the scaled empirical measure of Y / ||Y||_p, computed from raw Y: m_q(L^Y) / m_p(L^Y)^{q/p}.
inline double scaled_moment(std::span<const double> y, PExponent p, double q) {
  const double n = static_cast<double>(y.size());
  double sq = 0.0;
  for (double v : y) sq += std::pow(std::abs(v), q);
  if (p.is_infinite()) {
    double mx = 0.0;
    for (double v : y) mx = std::max(mx, std::abs(v));
    return (sq / n) / std::pow(mx, q);
  }
  const double pv = p.value();
  double sp = 0.0;
  for (double v : y) sp += std::pow(std::abs(v), pv);
  return (sq / n) / std::pow(sp / n, q / pv);
}

enum class RareMethod { Direct, TiltedIS };

inline std::string to_string(RareMethod m) { return m == RareMethod::Direct ? "Direct" : "TiltedIS"; }
inline RareMethod parse_rare_method(const std::string& s) {
  if (s == "Direct" || s == "direct") return RareMethod::Direct;
  if (s == "TiltedIS" || s == "tilted" || s == "is") return RareMethod::TiltedIS;
  throw ConfigError("unknown rare-event method '" + s + "'");
}

struct RareEventEstimate {
  std::size_t n = 0;
  PExponent p;
  PExponent q;
  Interval interval;
  /// log of the estimated probability; -inf when no sample hit the event.
  double log_prob = 0.0;
  /// Standard error of log_prob (equivalently the relative standard error of the probability).
  double std_error = 0.0;
  RareMethod method = RareMethod::Direct;
  std::size_t n_samples = 0;
  std::size_t hits = 0;
  double effective_sample_size = 0.0;
  bool reliable = true;

  double prob() const { return std::exp(log_prob); }
  double prob_std_error() const { return prob() * std_error; }
};

/// Minimum effective sample size for an estimate to count as reliable.
inline constexpr double kMinEffectiveSampleSize = 30.0;

/// Importance proposal in Y-space built from the max-entropy optimizer nu* for [0, beta].
/// Coordinates are i.i.d. nu*; when m_p(nu*) < 1 the missing p-th moment n(1 - m_p(nu*)) is
/// carried by one uniformly chosen coordinate (a defensive mixture with the plain tilt),
/// which is where the conditioned configurations put it.
class TiltProposal {
 public:
  TiltProposal(PExponent p, PExponent q, double beta, std::size_t n, double condensate_prob = 0.9)
      : p_(p), q_(q), n_(n), ref_(AnalyticDensity::generalized_gaussian(p)) {
    solution_ = solve_nu_star(p, q, beta);
    density_ = solution_->density();
    const double deficit = 1.0 - solution_->m_p_value;
    if (deficit > 1e-9) {
      condensate_prob_ = condensate_prob;
      location_ = std::pow(static_cast<double>(n) * deficit, 1.0 / p.value());
    }
  }

  /// Plain mu_p proposal (weights identically 1).
  static TiltProposal untilted(PExponent p, PExponent q, std::size_t n) { return TiltProposal(p, q, n); }

  bool is_untilted() const { return !solution_.has_value(); }
  bool has_condensate() const { return condensate_prob_ > 0.0; }
  double condensate_location() const { return location_; }
  const std::optional<MaxEntSolution>& solution() const { return solution_; }

  double draw_bulk(RngStream& rng) const {
    if (!solution_) return draw_gen_gaussian(p_, rng);
    const auto& s = *solution_;
    switch (s.regime) {
      case Regime::SmallBeta: return draw_scaled_gen_gaussian(s.params.q, s.beta, rng);
      case Regime::LargeBeta: return draw_gen_gaussian(p_, rng);
      case Regime::Intermediate: {
        // Rejection from exp(-kappa_q|x|^q) with acceptance exp(-kappa_p|x|^p).
        const double b = 1.0 / (s.params.kappa_q * s.params.q);
        for (;;) {
          const double x = draw_scaled_gen_gaussian(s.params.q, b, rng);
          if (rng.uniform() < std::exp(-s.params.kappa_p * std::pow(std::abs(x), s.params.p))) return x;
        }
      }
    }
    return 0.0;
  }

  /// Fill y with one proposal draw. `force_condensate` always plants the large coordinate.
  void draw(std::span<double> y, RngStream& rng, bool force_condensate = false) const {
    for (auto& v : y) v = draw_bulk(rng);
    if (has_condensate() && (force_condensate || rng.uniform() < condensate_prob_)) {
      const auto j = rng.below(y.size());
      y[j] = rng.sign() * (location_ + kCondensateScale * rng.normal());
    }
  }

  /// log prod mu_p(y_i) - log proposal(y): the exact likelihood ratio.
  double log_weight(std::span<const double> y) const {
    if (is_untilted() || solution_->regime == Regime::LargeBeta) return 0.0;
    double lw = 0.0;
    double max_r = -std::numeric_limits<double>::infinity();
    std::vector<double> r;
    if (has_condensate()) r.reserve(y.size());
    for (double v : y) {
      const double lb = density_.log_pdf(v);
      lw += ref_.log_pdf(v) - lb;
      if (has_condensate()) {
        r.push_back(log_condensate(v) - lb);
        max_r = std::max(max_r, r.back());
      }
    }
    if (has_condensate()) {
      double s = 0.0;
      for (double v : r) s += std::exp(v - max_r);
      const double log_mean = max_r + std::log(s / static_cast<double>(y.size()));
      const double a = std::log1p(-condensate_prob_);
      const double b = std::log(condensate_prob_) + log_mean;
      const double log_mix = std::max(a, b) + std::log1p(std::exp(-std::abs(a - b)));
      lw -= log_mix;
    }
    return lw;
  }

 private:
  static constexpr double kCondensateScale = 1.0;

  TiltProposal(PExponent p, PExponent q, std::size_t n)
      : p_(p), q_(q), n_(n), ref_(AnalyticDensity::generalized_gaussian(p)) {}

  double log_condensate(double v) const {
    const double c = -0.5 * std::log(2.0 * std::numbers::pi) - std::log(kCondensateScale) - std::log(2.0);
    const double a = -0.5 * std::pow((v - location_) / kCondensateScale, 2);
    const double b = -0.5 * std::pow((v + location_) / kCondensateScale, 2);
    return c + std::max(a, b) + std::log1p(std::exp(-std::abs(a - b)));
  }

  PExponent p_;
  PExponent q_;
  std::size_t n_;
  AnalyticDensity ref_;
  std::optional<MaxEntSolution> solution_;
  AnalyticDensity density_ = AnalyticDensity::generalized_gaussian(2.0);
  double condensate_prob_ = 0.0;
  double location_ = 0.0;
};

namespace detail {

inline void check_rare_args(PExponent p, PExponent q, std::size_t n, const Interval& interval) {
  require(q.is_finite(), "rare event: q must be finite");
  require(q < p, "rare event: requires q < p");
  require(n >= 1, "rare event: n must be >= 1");
  require(interval.lo >= 0.0 && interval.hi >= interval.lo, "rare event: interval must satisfy 0 <= lo <= hi");
}

inline TiltProposal make_tilt(PExponent p, PExponent q, std::size_t n, const Interval& interval) {
  if (p.is_infinite()) return TiltProposal::untilted(p, q, n);
  const auto t = thresholds(p, q.value());
  if (interval.hi >= t.beta_large) {
    if (interval.lo > t.beta_large) throw ConfigError("TiltedIS supports lower-tail events only (interval.lo must not exceed m_q(mu_p))");
    return TiltProposal::untilted(p, q, n);
  }
  return TiltProposal(p, q, interval.hi, n);
}

}  // namespace detail

/// P(m_q(L_{n,p}) in interval) under the cone measure.
inline RareEventEstimate estimate_rare_prob(PExponent p, PExponent q, std::size_t n, const Interval& interval,
                                            RareMethod method, std::size_t budget, RngStream& rng) {
  detail::check_rare_args(p, q, n, interval);
  detail::require(budget >= 1000, "estimate_rare_prob: budget must be >= 1000");
  RareEventEstimate est;
  est.n = n;
  est.p = p;
  est.q = q;
  est.interval = interval;
  est.method = method;
  est.n_samples = budget;

  const auto tilt = method == RareMethod::TiltedIS ? detail::make_tilt(p, q, n, interval) : TiltProposal::untilted(p, q, n);
  std::vector<double> y(n);
  std::vector<double> lw;
  for (std::size_t s = 0; s < budget; ++s) {
    tilt.draw(y, rng);
    if (interval.contains(scaled_moment(y, p, q.value()))) lw.push_back(tilt.log_weight(y));
  }
  est.hits = lw.size();
  if (lw.empty()) {
    est.log_prob = -std::numeric_limits<double>::infinity();
    est.std_error = std::numeric_limits<double>::infinity();
    est.reliable = false;
    return est;
  }
  const double mx = *std::max_element(lw.begin(), lw.end());
  double a = 0.0;
  double b = 0.0;
  for (double v : lw) {
    const double e = std::exp(v - mx);
    a += e;
    b += e * e;
  }
  const double nd = static_cast<double>(budget);
  est.log_prob = std::min(0.0, mx + std::log(a / nd));
  est.std_error = std::sqrt(std::max(0.0, nd * b / (a * a) - 1.0) / nd);
  est.effective_sample_size = a * a / b;
  est.reliable = est.effective_sample_size >= kMinEffectiveSampleSize;
  return est;
}

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_std_error = 0.0;
};

/// Weighted least squares of -log P_n on n with weights 1 / std_error^2.
inline SlopeFit fit_rate_slope(std::span<const RareEventEstimate> estimates) {
  detail::require(estimates.size() >= 2, "fit_rate_slope: need at least two estimates");
  double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& e : estimates) {
    detail::require(std::isfinite(e.log_prob) && e.std_error > 0.0, "fit_rate_slope: estimates must be finite with positive std_error");
    const double w = 1.0 / (e.std_error * e.std_error);
    const double x = static_cast<double>(e.n);
    const double yv = -e.log_prob;
    sw += w;
    sx += w * x;
    sy += w * yv;
    sxx += w * x * x;
    sxy += w * x * yv;
  }
  const double det = sw * sxx - sx * sx;
  detail::require(det > 0.0, "fit_rate_slope: need at least two distinct n");
  SlopeFit f;
  f.slope = (sw * sxy - sx * sy) / det;
  f.intercept = (sxx * sy - sx * sxy) / det;
  f.slope_std_error = std::sqrt(sw / det);
  return f;
}

struct ConditionalChainConfig {
  std::size_t n = 0;
  std::size_t burn_in = 1000;  // sweeps
  std::size_t thin = 1;        // sweeps between emitted points
  /// Per-coordinate random-walk step; 0 selects 2.4 times the standard deviation of the nu* marginal.
  double proposal_scale = 0.0;
  Interval target_interval;
  /// Random transpositions of coordinates per sweep (always accepted: the target is exchangeable).
  std::size_t swaps_per_sweep = 1;
};

/// Random-walk Metropolis in Y-space targeting mu_p^{(x)n} restricted to {m_q(L_{n,p}) in C}.
/// One sweep proposes a Gaussian move at every coordinate in turn, then applies the swaps.
class ConditionalChain {
 public:
  ConditionalChain(PExponent p, PExponent q, ConditionalChainConfig config, RngStream rng)
      : p_(p), q_(q), cfg_(config), rng_(std::move(rng)) {
    detail::check_rare_args(p, q, cfg_.n, cfg_.target_interval);
    detail::require(cfg_.target_interval.has_interior(), "sample_conditional: interval needs a nonempty interior");
    detail::require(cfg_.thin >= 1, "sample_conditional: thin must be >= 1");
    detail::require(p.is_finite(), "sample_conditional: p must be finite");
    detail::require(cfg_.proposal_scale >= 0.0, "sample_conditional: proposal_scale must be nonnegative");
    const auto tilt = detail::make_tilt(p, q, cfg_.n, cfg_.target_interval);
    if (cfg_.proposal_scale == 0.0) {
      const double var = tilt.solution() ? moment_exact(tilt.solution()->density(), 2.0)
                                         : moment_mu_p(p, 2.0);
      cfg_.proposal_scale = 2.4 * std::sqrt(var);
    }
    initialize(tilt);
  }

  /// Advance `thin` sweeps (after burn-in on first use) and emit the current state on the sphere.
  SpherePoint next() {
    if (!burned_in_) {
      for (std::size_t s = 0; s < cfg_.burn_in; ++s) sweep();
      burned_in_ = true;
    }
    for (std::size_t s = 0; s < cfg_.thin; ++s) sweep();
    return current_point();
  }

  SpherePoint current_point() const {
    SpherePoint x{y_, p_, 1.0};
    const double norm = lp_norm(x.coords, p_);
    for (auto& v : x.coords) v /= norm;
    return x;
  }

  double acceptance_rate() const { return proposals_ ? static_cast<double>(accepted_) / static_cast<double>(proposals_) : 0.0; }
  double proposal_scale() const { return cfg_.proposal_scale; }
  std::span<const double> state() const { return y_; }
  const ConditionalChainConfig& config() const { return cfg_; }

 private:
  static constexpr int kMaxInitAttempts = 10000;
  // Relative inner margin on the event, so rounding in the running sums never crosses the boundary.
  static constexpr double kEventMargin = 1e-10;

  double ratio(double sp, double sq) const {
    const double n = static_cast<double>(cfg_.n);
    return (sq / n) / std::pow(sp / n, q_.value() / p_.value());
  }
  bool inside(double sp, double sq) const {
    const double r = ratio(sp, sq);
    const auto& c = cfg_.target_interval;
    return r >= c.lo * (1.0 + kEventMargin) && r <= c.hi * (1.0 - kEventMargin);
  }
  double pw(double v) const { return std::pow(std::abs(v), p_.value()); }
  double qw(double v) const { return std::pow(std::abs(v), q_.value()); }

  void resync() {
    sp_ = 0.0;
    sq_ = 0.0;
    for (double v : y_) {
      sp_ += pw(v);
      sq_ += qw(v);
    }
  }

  void initialize(const TiltProposal& tilt) {
    y_.assign(cfg_.n, 0.0);
    for (int attempt = 0; attempt < kMaxInitAttempts; ++attempt) {
      tilt.draw(y_, rng_, /*force_condensate=*/true);
      resync();
      if (inside(sp_, sq_)) return;
      // Grow the largest coordinate: for q < p this lowers the scaled q-moment.
      if (cfg_.target_interval.lo == 0.0) {
        auto it = std::max_element(y_.begin(), y_.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
        for (int k = 0; k < 200 && !inside(sp_, sq_); ++k) {
          *it *= 1.05;
          resync();
        }
        if (inside(sp_, sq_)) return;
      }
    }
    throw NumericError("sample_conditional: could not initialize inside the event; try a wider interval (larger epsilon)");
  }

  void sweep() {
    const double inv_p = 1.0 / p_.value();
    for (std::size_t i = 0; i < cfg_.n; ++i) {
      const double old = y_[i];
      const double prop = old + cfg_.proposal_scale * rng_.normal();
      const double old_p = pw(old);
      const double new_p = pw(prop);
      const double sp = sp_ - old_p + new_p;
      const double sq = sq_ - qw(old) + qw(prop);
      ++proposals_;
      if (!inside(sp, sq)) continue;
      const double log_accept = -(new_p - old_p) * inv_p;
      if (log_accept >= 0.0 || std::log(rng_.uniform()) < log_accept) {
        y_[i] = prop;
        sp_ = sp;
        sq_ = sq;
        ++accepted_;
      }
    }
    for (std::size_t s = 0; s < cfg_.swaps_per_sweep && cfg_.n > 1; ++s) {
      const auto a = rng_.below(cfg_.n);
      const auto b = rng_.below(cfg_.n);
      std::swap(y_[a], y_[b]);
    }
    resync();
    if (!inside(sp_, sq_)) throw NumericError("sample_conditional: chain left the event (rounding)");
  }

  PExponent p_;
  PExponent q_;
  ConditionalChainConfig cfg_;
  RngStream rng_;
  std::vector<double> y_;
  double sp_ = 0.0;
  double sq_ = 0.0;
  bool burned_in_ = false;
  std::size_t proposals_ = 0;
  std::size_t accepted_ = 0;
};

/// `count` points from the restricted chain.
inline std::vector<SpherePoint> sample_conditional(PExponent p, PExponent q, std::size_t n, const Interval& interval,
                                                   ConditionalChainConfig config, const RngStream& rng, std::size_t count) {
  config.n = n;
  config.target_interval = interval;
  ConditionalChain chain(p, q, config, rng);
  std::vector<SpherePoint> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(chain.next());
  return out;
}

enum class SphereMeasure { Cone, Surface };

inline SphereMeasure parse_sphere_measure(const std::string& s) {
  if (s == "cone") return SphereMeasure::Cone;
  if (s == "surface") return SphereMeasure::Surface;
  throw ConfigError("unknown sphere measure '" + s + "'");
}

/// draws x k matrix of n^{1/p}(X_1, ..., X_k), row-major.
struct MarginalBatch {
  std::size_t k = 0;
  std::size_t draws = 0;
  std::vector<double> values;

  double at(std::size_t draw, std::size_t coord) const { return values[draw * k + coord]; }
  EmpiricalMeasure column(std::size_t coord) const {
    std::vector<double> c(draws);
    for (std::size_t d = 0; d < draws; ++d) c[d] = at(d, coord);
    return EmpiricalMeasure::uniform(std::move(c));
  }
};

namespace detail {
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}
}  // namespace detail

/// Child stream for draw index d. Depends only on (seed, stream_id, d), so runs at different n
/// share their randomness draw by draw (common random numbers).
inline RngStream child_stream(const RngStream& parent, std::uint64_t d) {
  return RngStream(parent.seed(), detail::mix64(parent.stream_id()) ^ detail::mix64(d + 0x632BE59BD9B4E019ull));
}

/// First k scaled coordinates of sphere draws under the cone or surface measure.
inline MarginalBatch pbm_marginals(PExponent p, std::size_t n, std::size_t k, std::size_t draws, SphereMeasure measure,
                                   RngStream& rng) {
  detail::require(k >= 1, "pbm_marginals: k must be >= 1");
  detail::require(k <= n, "pbm_marginals: k must not exceed n");
  detail::require(draws >= 1, "pbm_marginals: draws must be >= 1");
  const double scale = std::pow(static_cast<double>(n), p.reciprocal());
  std::vector<SpherePoint> pts;
  pts.reserve(draws);
  for (std::size_t d = 0; d < draws; ++d) {
    auto child = child_stream(rng, d);
    pts.push_back(sample_cone(p, n, child));
  }
  std::vector<std::size_t> index(draws);
  for (std::size_t d = 0; d < draws; ++d) index[d] = d;
  if (measure == SphereMeasure::Surface) {
    detail::require(p.is_finite(), "pbm_marginals: surface measure needs finite p");
    std::vector<double> lw(draws);
    for (std::size_t d = 0; d < draws; ++d) lw[d] = surface_log_weight(pts[d]);
    const double mx = *std::max_element(lw.begin(), lw.end());
    std::vector<double> w(draws);
    for (std::size_t d = 0; d < draws; ++d) w[d] = std::exp(lw[d] - mx);
    index = systematic_resample(w, draws, rng);
  }
  MarginalBatch out;
  out.k = k;
  out.draws = draws;
  out.values.resize(draws * k);
  for (std::size_t d = 0; d < draws; ++d)
    for (std::size_t j = 0; j < k; ++j) out.values[d * k + j] = scale * pts[index[d]].coords[j];
  return out;
}

}  // namespace lpld
