#pragma once

#include <cmath>
#include <vector>

#include "kmsf/errors.hpp"
#include "kmsf/lauricella.hpp"
#include "kmsf/quadrature.hpp"
#include "kmsf/scalar_hypergeom.hpp"
#include "kmsf/special.hpp"

namespace kmsf {

// Euler integral of F_D. Each half of [0,1] is mapped so that its endpoint power
// u^{a-1} or (1-u)^{c-a-1} is absorbed into the measure.
inline double fd_integral_oracle(const FdArgs& f, double quad_tol) {
  if (!(f.a > 0.0) || !(f.c - f.a > 0.0)) throw DomainError("fd_integral_oracle: needs a > 0 and c - a > 0");
  if (f.b.size() != f.x.size()) throw InvalidParameter("fd_integral_oracle: length(b) != length(x)");
  for (double xj : f.x)
    if (!(xj < 1.0)) throw DomainError("fd_integral_oracle: needs every x < 1");
  const double a = f.a, ca = f.c - f.a;
  auto log_g = [&](double u) {
    double s = 0.0;
    for (std::size_t j = 0; j < f.x.size(); ++j) s -= f.b[j] * std::log1p(-u * f.x[j]);
    return s;
  };
  auto left = [&](double w) {
    double u = std::pow(w, 1.0 / a);
    return std::exp((ca - 1.0) * std::log1p(-u) + log_g(u));
  };
  auto right = [&](double w) {
    double v = std::pow(w, 1.0 / ca);
    return std::exp((a - 1.0) * std::log1p(-v) + log_g(1.0 - v));
  };
  QuadResult l = integrate(left, 0.0, std::pow(0.5, a), 0.0, quad_tol, 20000);
  QuadResult r = integrate(right, 0.0, std::pow(0.5, ca), 0.0, quad_tol, 20000);
  if (!l.converged || !r.converged) throw QuadratureFailure("fd_integral_oracle: tolerance not reached");
  double norm = std::exp(log_gamma(f.c) - log_gamma(a) - log_gamma(ca));
  return norm * (l.value / a + r.value / ca);
}

// Laplace-type integral of a product of two confluent functions:
// (1/Gamma(a)) int_0^inf e^{-t} t^{a-1} Phi2^(k)(b_1..b_k; c; x t) Phi2^(N-k)(b_{k+1}..; c'; x t) dt.
inline double ed_integral_oracle(const EdArgs& e, int k, double quad_tol) {
  if (!(e.a > 0.0)) throw DomainError("ed_integral_oracle: needs a > 0");
  if (e.b.size() != e.x.size()) throw InvalidParameter("ed_integral_oracle: length(b) != length(x)");
  if (k < 0 || static_cast<std::size_t>(k) > e.b.size()) throw InvalidParameter("ed_integral_oracle: bad split k");
  SeriesConfig cfg;
  cfg.abs_tol = 1e-300;
  cfg.rel_tol = 1e-15;
  std::vector<double> b1(e.b.begin(), e.b.begin() + k), b2(e.b.begin() + k, e.b.end());
  const double lga = log_gamma(e.a);
  auto log_factors = [&](double t) {
    std::vector<double> x1, x2;
    for (int j = 0; j < k; ++j) x1.push_back(e.x[j] * t);
    for (std::size_t j = k; j < e.x.size(); ++j) x2.push_back(e.x[j] * t);
    SignedLog p = log_phi2_n(b1, e.c, x1, cfg) * log_phi2_n(b2, e.c_prime, x2, cfg);
    return p;
  };
  // [0,1] with t = w^{1/a}; the measure t^{a-1} dt becomes dw/a.
  auto head = [&](double w) {
    double t = std::pow(w, 1.0 / e.a);
    SignedLog p = log_factors(t);
    return p.sign * std::exp(p.log_abs - t - lga);
  };
  auto tail = [&](double t) {
    SignedLog p = log_factors(t);
    return p.sign * std::exp(p.log_abs - t + (e.a - 1.0) * std::log(t) - lga);
  };
  QuadResult h = integrate(head, 0.0, 1.0, 0.0, quad_tol, 20000);
  QuadResult tl = integrate_to_infinity(tail, 1.0, 0.0, quad_tol, 20000);
  if (!h.converged || !tl.converged) throw QuadratureFailure("ed_integral_oracle: tolerance not reached");
  return h.value / e.a + tl.value;
}

}  // namespace kmsf
