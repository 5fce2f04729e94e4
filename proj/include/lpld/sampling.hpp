#pragma once

// Exact samplers for mu_p^{(x)n}, the cone measure on the unit l^p sphere, and the surface
// measure (cone draws reweighted by the surface/cone density ratio).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "lpld/error.hpp"
#include "lpld/exponent.hpp"
#include "lpld/rng.hpp"

namespace lpld {

/// A point on the unit l^p sphere in R^n, with an importance weight (1 for cone draws).
struct SpherePoint {
  std::vector<double> coords;
  PExponent p;
  double weight = 1.0;

  std::size_t dimension() const { return coords.size(); }
};

/// ||x||_p, computed with max-scaling so large or tiny coordinates do not overflow.
inline double lp_norm(std::span<const double> x, PExponent p) {
  double scale = 0.0;
  for (double v : x) scale = std::max(scale, std::abs(v));
  if (p.is_infinite() || scale == 0.0) return scale;
  const double pv = p.value();
  double sum = 0.0;
  if (pv == 2.0) {
    for (double v : x) {
      const double t = v / scale;
      sum += t * t;
    }
    return scale * std::sqrt(sum);
  }
  for (double v : x) sum += std::pow(std::abs(v) / scale, pv);
  return scale * std::pow(sum, 1.0 / pv);
}

/// One draw from mu_p: eps * (p G)^{1/p}, G ~ Gamma(1/p); uniform on [-1, 1] for p = inf.
inline double draw_gen_gaussian(PExponent p, RngStream& rng) {
  if (p.is_infinite()) return 2.0 * rng.uniform() - 1.0;
  const double pv = p.value();
  const double g = rng.gamma(1.0 / pv);
  const double mag = pv == 2.0 ? std::sqrt(2.0 * g) : std::pow(pv * g, 1.0 / pv);
  return rng.sign() * mag;
}

/// One draw from mu_{q,beta}: eps * (beta q G)^{1/q}, G ~ Gamma(1/q).
inline double draw_scaled_gen_gaussian(double q, double beta, RngStream& rng) {
  const double g = rng.gamma(1.0 / q);
  return rng.sign() * std::pow(beta * q * g, 1.0 / q);
}

inline std::vector<double> sample_gen_gaussian(PExponent p, std::size_t n, RngStream& rng) {
  detail::require(n >= 1, "sample_gen_gaussian: n must be >= 1");
  std::vector<double> out(n);
  for (auto& v : out) v = draw_gen_gaussian(p, rng);
  return out;
}

/// Y / ||Y||_p with Y ~ mu_p^{(x)n}: distributed as the cone measure.
inline SpherePoint sample_cone(PExponent p, std::size_t n, RngStream& rng) {
  detail::require(n >= 1, "sample_cone: n must be >= 1");
  for (;;) {
    auto y = sample_gen_gaussian(p, n, rng);
    const double norm = lp_norm(y, p);
    if (norm == 0.0) continue;  // probability zero, but cheap to guard
    for (auto& v : y) v /= norm;
    return {std::move(y), p, 1.0};
  }
}

/// log (sum |x_i|^{2p-2})^{1/2}: the surface/cone density ratio up to its normalizing constant.
inline double surface_log_weight(const SpherePoint& x) {
  const double pv = x.p.value();
  const double r = 2.0 * pv - 2.0;
  double sum = 0.0;
  for (double v : x.coords) sum += r == 0.0 ? 1.0 : std::pow(std::abs(v), r);
  return 0.5 * std::log(sum);
}

struct SurfaceWeightStats {
  double log_weight_min = 0.0;
  double log_weight_max = 0.0;
  std::size_t n = 0;
  PExponent p;

  double width() const { return log_weight_max - log_weight_min; }
  /// 2 |1/2 - 1/p| log n.
  double bound() const { return 2.0 * std::abs(0.5 - p.reciprocal()) * std::log(static_cast<double>(n)); }
  bool within_bound() const { return width() <= bound() + 1e-9; }
};

struct SurfaceBatch {
  /// Cone draws carrying raw weights, or unweighted surface draws after resampling.
  std::vector<SpherePoint> points;
  /// Self-normalized weights, summing to 1 (uniform after resampling).
  std::vector<double> normalized_weights;
  SurfaceWeightStats stats;
  /// (sum w)^2 / sum w^2 of the raw weights.
  double effective_sample_size = 0.0;
  bool resampled = false;
};

/// Systematic resampling: `count` indices drawn with probabilities proportional to `weights`.
inline std::vector<std::size_t> systematic_resample(std::span<const double> weights, std::size_t count, RngStream& rng) {
  detail::require(!weights.empty() && count > 0, "systematic_resample: empty input");
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  detail::require(total > 0.0, "systematic_resample: weights must have positive sum");
  std::vector<std::size_t> idx;
  idx.reserve(count);
  const double step = total / static_cast<double>(count);
  double u = rng.uniform() * step;
  double cum = weights[0];
  std::size_t j = 0;
  for (std::size_t k = 0; k < count; ++k) {
    while (u > cum && j + 1 < weights.size()) cum += weights[++j];
    idx.push_back(j);
    u += step;
  }
  return idx;
}

/// Surface-measure draws by self-normalized importance sampling over cone draws.
inline SurfaceBatch sample_surface(PExponent p, std::size_t n, std::size_t batch, RngStream& rng, bool resample = false) {
  if (p.is_infinite()) throw ConfigError("sample_surface: p must be finite (use sample_cone for p = inf)");
  detail::require(batch > 0, "sample_surface: batch must be positive");
  detail::require(n >= 1, "sample_surface: n must be >= 1");
  SurfaceBatch out;
  out.points.reserve(batch);
  std::vector<double> logw(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    auto x = sample_cone(p, n, rng);
    logw[i] = surface_log_weight(x);
    out.points.push_back(std::move(x));
  }
  const auto [mn, mx] = std::minmax_element(logw.begin(), logw.end());
  out.stats = {*mn, *mx, n, p};
  std::vector<double> w(batch);
  double sum = 0.0;
  double sum2 = 0.0;
  for (std::size_t i = 0; i < batch; ++i) {
    w[i] = std::exp(logw[i] - *mx);
    out.points[i].weight = std::exp(logw[i]);
    sum += w[i];
    sum2 += w[i] * w[i];
  }
  out.effective_sample_size = sum * sum / sum2;
  out.normalized_weights.resize(batch);
  for (std::size_t i = 0; i < batch; ++i) out.normalized_weights[i] = w[i] / sum;
  if (resample) {
    const auto idx = systematic_resample(w, batch, rng);
    std::vector<SpherePoint> drawn;
    drawn.reserve(batch);
    for (auto k : idx) {
      drawn.push_back(out.points[k]);
      drawn.back().weight = 1.0;
    }
    out.points = std::move(drawn);
    std::fill(out.normalized_weights.begin(), out.normalized_weights.end(), 1.0 / static_cast<double>(batch));
    out.resampled = true;
  }
  return out;
}

}  // namespace lpld
