#pragma once

#include <array>
#include <cmath>
#include <string>

#include "kmsf/errors.hpp"
#include "kmsf/series_config.hpp"
#include "kmsf/special.hpp"

namespace kmsf {

namespace detail {

// Generic pFq partial sums with overflow rescaling. Returns sign and log|value|.
template <std::size_t P, std::size_t Q>
SignedLog pfq_series(const std::array<double, P>& a, const std::array<double, Q>& b, double x,
                     const SeriesConfig& cfg, const char* name) {
  for (double bj : b)
    if (is_nonpositive_integer(bj)) throw DomainError(std::string(name) + ": lower parameter is a nonpositive integer");
  bool terminating = false;
  for (double ai : a)
    if (is_nonpositive_integer(ai)) terminating = true;

  constexpr long double kBig = 1e300L;
  const long double kLogBig = std::log(kBig);
  long double term = 1.0L;
  long double log_off = 0.0L;
  CompensatedSum<long double> acc;
  acc.add(1.0L);
  int quiet = 0;
  for (std::int64_t n = 0;; ++n) {
    if (n >= cfg.max_total_terms) throw NonConvergence(std::string(name) + ": term cap reached");
    long double ratio = static_cast<long double>(x) / (n + 1);
    for (double ai : a) ratio *= static_cast<long double>(ai) + n;
    for (double bj : b) ratio /= static_cast<long double>(bj) + n;
    term *= ratio;
    if (term == 0.0L) break;
    acc.add(term);
    long double s = acc.value();
    if (std::fabs(term) > kBig || std::fabs(s) > kBig) {
      long double v = s / kBig;
      acc = CompensatedSum<long double>();
      acc.add(v);
      term /= kBig;
      log_off += kLogBig;
      s = v;
    }
    if (terminating) continue;
    long double r = std::fabs(ratio);
    long double tail = r < 1.0L ? std::fabs(term) * r / (1.0L - r) : std::numeric_limits<long double>::infinity();
    long double tol = static_cast<long double>(cfg.abs_tol) * std::exp(-log_off) +
                      static_cast<long double>(cfg.rel_tol) * std::fabs(s);
    if (tail <= tol) {
      if (++quiet >= 3) break;
    } else {
      quiet = 0;
    }
  }
  long double s = acc.value();
  if (s == 0.0L) return {};
  return {static_cast<double>(std::log(std::fabs(s)) + log_off), s > 0 ? 1 : -1};
}

}  // namespace detail

// log-form 1F1. Negative arguments go through Kummer's transformation so the summed
// series never alternates in sign.
inline SignedLog log_kummer_1f1(double a, double b, double x, const SeriesConfig& cfg = {}) {
  if (is_nonpositive_integer(b)) throw DomainError("kummer_1f1: b is a nonpositive integer");
  if (x == 0.0) return {0.0, 1};
  if (x < -1.0 && !is_nonpositive_integer(a)) {
    SignedLog t = detail::pfq_series<1, 1>({b - a}, {b}, -x, cfg, "kummer_1f1");
    t.log_abs += x;
    return t;
  }
  return detail::pfq_series<1, 1>({a}, {b}, x, cfg, "kummer_1f1");
}

inline double kummer_1f1(double a, double b, double x, const SeriesConfig& cfg = {}) {
  return log_kummer_1f1(a, b, x, cfg).value();
}

inline double gauss_2f1(double a, double b, double c, double x, const SeriesConfig& cfg = {}) {
  if (is_nonpositive_integer(c)) throw DomainError("gauss_2f1: c is a nonpositive integer");
  if (x == 0.0) return 1.0;
  if (is_nonpositive_integer(a) || is_nonpositive_integer(b))
    return detail::pfq_series<2, 1>({a, b}, {c}, x, cfg, "gauss_2f1").value();
  if (!(std::fabs(x) < 1.0)) throw DomainError("gauss_2f1: |x| >= 1 and the series does not terminate");
  const double e = c - a - b;
  if (is_nonpositive_integer(c - a) || is_nonpositive_integer(c - b)) {
    SignedLog t = detail::pfq_series<2, 1>({c - a, c - b}, {c}, x, cfg, "gauss_2f1");
    return t.value() * std::pow(1.0 - x, e);
  }
  if (x < -0.5) {
    // Pfaff: maps (-1, -0.5) into (1/3, 1/2).
    double z = x / (x - 1.0);
    if (is_nonpositive_integer(c - a))
      return std::pow(1.0 - x, -b) * detail::pfq_series<2, 1>({c - a, b}, {c}, z, cfg, "gauss_2f1").value();
    return std::pow(1.0 - x, -a) * detail::pfq_series<2, 1>({a, c - b}, {c}, z, cfg, "gauss_2f1").value();
  }
  if (x > 0.9 && e < 0.0) {
    // Euler: tail exponent n^{a+b-c-1} becomes n^{c-a-b-1}.
    SignedLog t = detail::pfq_series<2, 1>({c - a, c - b}, {c}, x, cfg, "gauss_2f1");
    return t.value() * std::pow(1.0 - x, e);
  }
  return detail::pfq_series<2, 1>({a, b}, {c}, x, cfg, "gauss_2f1").value();
}

inline double clausen_3f2(double a1, double a2, double a3, double b1, double b2, double x,
                          const SeriesConfig& cfg = {}) {
  if (x == 0.0) return 1.0;
  bool term = is_nonpositive_integer(a1) || is_nonpositive_integer(a2) || is_nonpositive_integer(a3);
  if (!term && !(std::fabs(x) < 1.0)) throw DomainError("clausen_3f2: |x| >= 1 and the series does not terminate");
  return detail::pfq_series<3, 2>({a1, a2, a3}, {b1, b2}, x, cfg, "clausen_3f2").value();
}

}  // namespace kmsf
