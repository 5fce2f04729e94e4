#pragma once

// Globally adaptive Gauss-Kronrod (7/15) quadrature on finite intervals.

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <vector>

namespace lpld::quad {

struct Options {
  double abs_tol = 1e-14;
  double rel_tol = 1e-13;
  int max_subdivisions = 4000;
  int initial_pieces = 1;
};

struct Result {
  double value = 0.0;
  double error = 0.0;
  int evaluations = 0;
  bool converged = false;
};

namespace detail {

inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the center.
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F>
Segment kronrod15(F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * kWgk[7];
  double gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const double sum = f(center - dx) + f(center + dx);
    kronrod += kWgk[j] * sum;
    if (j % 2 == 1) gauss += kWg[j / 2] * sum;
  }
  return {a, b, kronrod * half, std::abs((kronrod - gauss) * half)};
}

}  // namespace detail

template <class F>
Result integrate(F&& f, double a, double b, const Options& opt = {}) {
  Result out;
  if (a == b) {
    out.converged = true;
    return out;
  }
  std::priority_queue<detail::Segment> heap;
  const int pieces = std::max(1, opt.initial_pieces);
  const double step = (b - a) / pieces;
  double total = 0.0;
  double err = 0.0;
  for (int i = 0; i < pieces; ++i) {
    const double lo = a + step * i;
    const double hi = (i + 1 == pieces) ? b : a + step * (i + 1);
    auto seg = detail::kronrod15(f, lo, hi);
    total += seg.value;
    err += seg.error;
    heap.push(seg);
  }
  out.evaluations = 15 * pieces;
  int splits = 0;
  while (err > std::max(opt.abs_tol, opt.rel_tol * std::abs(total)) && splits < opt.max_subdivisions) {
    const auto worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b) {
      // Cannot split further in floating point; keep the segment as is.
      heap.push(worst);
      break;
    }
    auto left = detail::kronrod15(f, worst.a, mid);
    auto right = detail::kronrod15(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    out.evaluations += 30;
    ++splits;
  }
  // Re-sum to shed accumulated cancellation from the running updates.
  total = 0.0;
  err = 0.0;
  while (!heap.empty()) {
    total += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  out.value = total;
  out.error = err;
  out.converged = err <= std::max(opt.abs_tol, opt.rel_tol * std::abs(total)) * 1.0001;
  return out;
}

/// Integral of an even function over the real line, truncated at +-cutoff: 2 * int_0^cutoff f.
template <class F>
Result integrate_even(F&& f, double cutoff, Options opt = {}) {
  if (opt.initial_pieces < 16) opt.initial_pieces = 16;
  auto r = integrate(f, 0.0, cutoff, opt);
  r.value *= 2.0;
  r.error *= 2.0;
  return r;
}

}  // namespace lpld::quad
