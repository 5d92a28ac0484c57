#pragma once

#include <cmath>
#include <limits>
#include <queue>
#include <vector>

#include "kmsf/errors.hpp"

namespace kmsf {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  int intervals = 0;
  bool converged = false;
};

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule.
inline constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double lo, hi, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F>
Segment gk15(F& f, double lo, double hi) {
  const double c = 0.5 * (lo + hi);
  const double h = 0.5 * (hi - lo);
  double fc = f(c);
  double resk = fc * kWgk[7];
  double resg = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    double dx = h * kXgk[j];
    double s = f(c - dx) + f(c + dx);
    resk += kWgk[j] * s;
    if (j % 2 == 1) resg += kWg[j / 2] * s;
  }
  return {lo, hi, resk * h, std::fabs((resk - resg) * h)};
}

}  // namespace detail

// Globally adaptive Gauss-Kronrod on [lo, hi] with optional interior breakpoints.
template <class F>
QuadResult integrate(F&& f, double lo, double hi, double abs_tol, double rel_tol,
                     int max_intervals = 4000, const std::vector<double>& breaks = {}) {
  std::vector<double> edges{lo};
  for (double b : breaks)
    if (b > lo && b < hi) edges.push_back(b);
  edges.push_back(hi);
  std::priority_queue<detail::Segment> heap;
  double total = 0.0, err = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    if (!(edges[i + 1] > edges[i])) continue;
    auto s = detail::gk15(f, edges[i], edges[i + 1]);
    total += s.value;
    err += s.error;
    heap.push(s);
  }
  int n = static_cast<int>(heap.size());
  while (!heap.empty() && err > std::max(abs_tol, rel_tol * std::fabs(total))) {
    if (n >= max_intervals) return {total, err, n, false};
    auto s = heap.top();
    heap.pop();
    double mid = 0.5 * (s.lo + s.hi);
    if (!(mid > s.lo && mid < s.hi)) return {total, err, n, false};
    auto l = detail::gk15(f, s.lo, mid);
    auto r = detail::gk15(f, mid, s.hi);
    total += l.value + r.value - s.value;
    err += l.error + r.error - s.error;
    heap.push(l);
    heap.push(r);
    ++n;
    if (!std::isfinite(total)) return {total, err, n, false};
  }
  // Recompute from the leaves to shed accumulated rounding in the running totals.
  double t = 0.0, e = 0.0;
  while (!heap.empty()) {
    t += heap.top().value;
    e += heap.top().error;
    heap.pop();
  }
  return {t, e, n, true};
}

// Integral over [lo, inf) through t = lo + u/(1-u).
template <class F>
QuadResult integrate_to_infinity(F&& f, double lo, double abs_tol, double rel_tol,
                                 int max_intervals = 4000, const std::vector<double>& breaks = {}) {
  auto g = [&](double u) {
    double w = 1.0 - u;
    double t = lo + u / w;
    double v = f(t);
    return v == 0.0 ? 0.0 : v / (w * w);
  };
  std::vector<double> ub;
  for (double b : breaks)
    if (b > lo) ub.push_back((b - lo) / (1.0 + b - lo));
  return integrate(g, 0.0, 1.0, abs_tol, rel_tol, max_intervals, ub);
}

}  // namespace kmsf
