#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "kmsf/errors.hpp"
#include "kmsf/series_config.hpp"
#include "kmsf/special.hpp"

namespace kmsf {

struct FdArgs {
  double a = 0.0;
  std::vector<double> b;
  double c = 1.0;
  std::vector<double> x;
};

struct EdArgs {
  double a = 0.0;
  std::vector<double> b;
  double c = 1.0;
  double c_prime = 1.0;
  std::vector<double> x;
};

// Total-degree shells h_n = [t^n] prod_j (1 - x_j t)^{-b_j}, from Newton's identity
// n h_n = sum_{k=1..n} s_k h_{n-k} with power sums s_k = sum_j b_j x_j^k.
// The shells do not depend on a or c, so one kernel serves many (a, c) pairs.
class ShellKernel {
 public:
  ShellKernel() { h_.push_back(1.0L); }
  ShellKernel(const std::vector<double>& b, const std::vector<double>& x, double scale = 1.0) : ShellKernel() {
    if (b.size() != x.size()) throw InvalidParameter("ShellKernel: length(b) != length(x)");
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (b[j] == 0.0 || x[j] == 0.0) continue;
      b_.push_back(b[j]);
      x_.push_back(static_cast<long double>(x[j]) / scale);
      r_max_ = std::max(r_max_, std::fabs(x[j] / scale));
      if (b[j] > 0) b_pos_ += b[j];
      b_abs_ += std::fabs(b[j]);
    }
    u_.assign(x_.size(), 1.0L);
  }

  std::size_t dims() const { return b_.size(); }
  double r_max() const { return r_max_; }
  double b_pos() const { return b_pos_; }
  double b_abs() const { return b_abs_; }
  std::size_t computed() const { return h_.size(); }

  long double h(std::size_t n) {
    if (n >= h_.size()) extend_to(n);
    return h_[n];
  }

 private:
  // n h_n = sum_j b_j x_j u_j with u_j = sum_{i<n} x_j^{n-1-i} h_i, updated once per shell.
  void extend_to(std::size_t n) {
    for (std::size_t k = h_.size(); k <= n; ++k) {
      long double acc = 0.0L;
      for (std::size_t j = 0; j < x_.size(); ++j) acc += b_[j] * x_[j] * u_[j];
      long double hk = acc / static_cast<long double>(k);
      for (std::size_t j = 0; j < x_.size(); ++j) u_[j] = x_[j] * u_[j] + hk;
      h_.push_back(hk);
    }
  }

  std::vector<long double> b_, x_, u_, h_;
  double r_max_ = 0.0, b_pos_ = 0.0, b_abs_ = 0.0;
};

enum class ShellWeight { lauricella, confluent };

struct ShellSum {
  long double mantissa = 0.0L;  // value = mantissa * exp(log_scale)
  long double log_scale = 0.0L;
  std::int64_t shells = 0;
  long double log_max_term = -std::numeric_limits<long double>::infinity();  // largest |term|, for cancellation checks

  SignedLog as_log() const {
    if (mantissa == 0.0L) return {};
    return {static_cast<double>(std::log(std::fabs(mantissa)) + log_scale), mantissa > 0 ? 1 : -1};
  }
  long double value() const { return mantissa * std::exp(log_scale); }
};

// Sums w_n h_n with w_n = (a)_n/(c)_n (lauricella) or rho^n/(c)_n (confluent, with the
// kernel built on x/rho). Stops after three consecutive shells whose tail estimate falls
// below abs_tol + rel_tol*|partial|, once past the envelope peak of the terms.
inline ShellSum sum_shells(ShellKernel& k, double a, double c, ShellWeight mode, const SeriesConfig& cfg,
                           const char* name, double rho = 1.0) {
  if (is_nonpositive_integer(c)) throw DomainError(std::string(name) + ": c is a nonpositive integer");
  ShellSum out;
  const std::int64_t cap = cfg.shell_cap();
  const bool lau = mode == ShellWeight::lauricella;
  const bool terminating = lau && is_nonpositive_integer(a);
  const double r = k.r_max();
  if (k.dims() == 0 || r == 0.0) {
    out.mantissa = 1.0L;
    return out;
  }

  std::int64_t n_min = 0;
  long double tail_factor = 1.0L;
  if (terminating) {
    n_min = static_cast<std::int64_t>(-a);
    if (n_min > cap) throw NonConvergence(std::string(name) + ": terminating degree exceeds shell cap");
  } else if (lau) {
    double lr = -std::log(r);
    double e = a - c + k.b_pos();
    double peak = e > 1.0 ? (e - 1.0) / lr : 0.0;
    double start = a < 0 ? std::ceil(-a) + 2.0 : 0.0;
    n_min = static_cast<std::int64_t>(std::max(peak, start));
    double need = std::max(peak, start) + std::log(1.0 / cfg.rel_tol) / lr;
    if (need > static_cast<double>(cap))
      throw NonConvergence(std::string(name) + ": estimated " + std::to_string(static_cast<long long>(need)) +
                           " shells exceed the cap");
    tail_factor = 1.0L / (1.0L - r);
  } else {
    n_min = static_cast<std::int64_t>(std::ceil(2.0 * rho * r + k.b_abs() + std::fabs(c))) + 2;
    if (n_min > cap) throw NonConvergence(std::string(name) + ": argument too large for the shell cap");
  }

  constexpr long double kBig = 1e1000L;
  const long double kLogBig = std::log(kBig);
  long double w = 1.0L;
  CompensatedSum<long double> acc;
  int quiet = 0;
  std::int64_t n = 0;
  for (;; ++n) {
    if (n > cap) throw NonConvergence(std::string(name) + ": shell cap reached");
    long double t = w * k.h(static_cast<std::size_t>(n));
    acc.add(t);
    if (t != 0.0L) out.log_max_term = std::max(out.log_max_term, std::log(std::fabs(t)) + out.log_scale);
    long double s = acc.value();
    if (terminating) {
      if (n >= n_min) break;
    } else if (n >= n_min) {
      long double tf = lau ? std::min<long double>(tail_factor, n + 1.0L) : 1.0L;
      long double tol = static_cast<long double>(cfg.abs_tol) * std::exp(-out.log_scale) +
                        static_cast<long double>(cfg.rel_tol) * std::fabs(s);
      if (std::fabs(t) * tf <= tol) {
        if (++quiet >= 3) break;
      } else {
        quiet = 0;
      }
    }
    if (lau)
      w *= (static_cast<long double>(a) + n) / (static_cast<long double>(c) + n);
    else
      w *= static_cast<long double>(rho) / (static_cast<long double>(c) + n);
    if (std::fabs(w) > kBig || std::fabs(s) > kBig) {
      w /= kBig;
      long double v = s / kBig;
      acc = CompensatedSum<long double>();
      acc.add(v);
      out.log_scale += kLogBig;
    }
  }
  out.mantissa = acc.value();
  out.shells = n + 1;
  return out;
}

namespace detail {

struct FdForm {
  SignedLog prefactor{0.0, 1};
  double a = 0.0;
  std::vector<double> b, x;
  double c = 1.0;
  double max_arg = 0.0;
};

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double e : v) m = std::max(m, std::fabs(e));
  return m;
}

// Candidate analytic continuations for arguments in (-inf, 1).
inline std::vector<FdForm> fd_forms(const FdArgs& f) {
  std::vector<FdForm> out;
  const std::size_t n = f.x.size();
  double bsum = 0.0;
  for (double v : f.b) bsum += v;
  out.push_back({{0.0, 1}, f.a, f.b, f.x, f.c, max_abs(f.x)});
  {
    // Pfaff on every variable.
    FdForm g{{0.0, 1}, f.c - f.a, f.b, {}, f.c, 0.0};
    for (std::size_t j = 0; j < n; ++j) {
      g.x.push_back(f.x[j] / (f.x[j] - 1.0));
      g.prefactor.log_abs += -f.b[j] * std::log1p(-f.x[j]);
    }
    g.max_arg = max_abs(g.x);
    out.push_back(g);
  }
  for (std::size_t k = 0; k < n; ++k) {
    const double xk = f.x[k];
    FdForm g{{-f.a * std::log1p(-xk), 1}, f.a, f.b, std::vector<double>(n), f.c, 0.0};
    g.b[k] = f.c - bsum;
    for (std::size_t j = 0; j < n; ++j) g.x[j] = j == k ? xk / (xk - 1.0) : (xk - f.x[j]) / (xk - 1.0);
    g.max_arg = max_abs(g.x);
    out.push_back(g);

    FdForm d{{(f.c - f.a) * std::log1p(-xk), 1}, f.c - f.a, f.b, std::vector<double>(n), f.c, 0.0};
    d.b[k] = f.c - bsum;
    for (std::size_t j = 0; j < n; ++j) {
      d.prefactor.log_abs += -f.b[j] * std::log1p(-f.x[j]);
      d.x[j] = j == k ? xk : (xk - f.x[j]) / (1.0 - f.x[j]);
    }
    d.max_arg = max_abs(d.x);
    out.push_back(d);
  }
  return out;
}

inline void compact(FdArgs& f) {
  FdArgs g{f.a, {}, f.c, {}};
  for (std::size_t j = 0; j < f.b.size(); ++j) {
    if (f.b[j] == 0.0 || f.x[j] == 0.0) continue;
    g.b.push_back(f.b[j]);
    g.x.push_back(f.x[j]);
  }
  f = std::move(g);
}

}  // namespace detail

// Lauricella F_D^(N). Inside the unit polydisc the series is summed directly;
// for arguments in (-inf, 1) outside it, the continuation with the smallest
// largest-argument is used. Terminating cases (a = -n) accept any real x.
inline SignedLog log_lauricella_fd(FdArgs f, const SeriesConfig& cfg = {}) {
  cfg.validate();
  if (f.b.size() != f.x.size()) throw InvalidParameter("lauricella_fd: length(b) != length(x)");
  if (is_nonpositive_integer(f.c)) throw InvalidParameter("lauricella_fd: c is a nonpositive integer");
  detail::compact(f);
  if (f.b.empty() || f.a == 0.0) return {0.0, 1};

  detail::FdForm form{{0.0, 1}, f.a, f.b, f.x, f.c, detail::max_abs(f.x)};
  if (!is_nonpositive_integer(f.a) && form.max_arg >= 1.0) {
    for (double xj : f.x)
      if (xj >= 1.0) throw DomainError("lauricella_fd: argument >= 1 and the series does not terminate");
    auto forms = detail::fd_forms(f);
    auto best = std::min_element(forms.begin(), forms.end(),
                                 [](const auto& l, const auto& r) { return l.max_arg < r.max_arg; });
    form = *best;
    if (form.max_arg >= 1.0) throw DomainError("lauricella_fd: no convergent continuation for these arguments");
  }
  ShellKernel k(form.b, form.x);
  ShellSum s = sum_shells(k, form.a, form.c, ShellWeight::lauricella, cfg, "lauricella_fd");
  return s.as_log() * form.prefactor;
}

inline double lauricella_fd(const FdArgs& f, const SeriesConfig& cfg = {}) {
  return log_lauricella_fd(f, cfg).value();
}

// Confluent Phi_2^(N). Negative arguments are removed by the exponential pivot
// Phi2(b; c; x) = e^{x_k} Phi2(b with b_k -> c - sum b; c; x_j - x_k, -x_k).
inline SignedLog log_phi2_n(std::vector<double> b, double c, std::vector<double> x, const SeriesConfig& cfg = {}) {
  cfg.validate();
  if (b.size() != x.size()) throw InvalidParameter("phi2_n: length(b) != length(x)");
  if (is_nonpositive_integer(c)) throw InvalidParameter("phi2_n: c is a nonpositive integer");
  double log_pre = 0.0;
  std::size_t k = 0;
  for (std::size_t j = 1; j < x.size(); ++j)
    if (x[j] < x[k]) k = j;
  if (!x.empty() && x[k] < 0.0) {
    double bsum = 0.0;
    for (double v : b) bsum += v;
    const double xk = x[k];
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = j == k ? -xk : x[j] - xk;
    b[k] = c - bsum;
    log_pre = xk;
  }
  double rho = detail::max_abs(x);
  if (rho == 0.0) return {log_pre, 1};
  ShellKernel kern(b, x, rho);
  ShellSum s = sum_shells(kern, 0.0, c, ShellWeight::confluent, cfg, "phi2_n", rho);
  SignedLog out = s.as_log();
  out.log_abs += log_pre;
  return out;
}

inline double phi2_n(const std::vector<double>& b, double c, const std::vector<double>& x,
                     const SeriesConfig& cfg = {}) {
  return log_phi2_n(b, c, x, cfg).value();
}

struct EdResult {
  double value = 0.0;
  std::int64_t outer_terms = 0;
  std::int64_t shells = 0;
};

// Outer sum of E_D: sum_i (a)_i (b1)_i x1^i / ((c)_i i!) F_D(a+i, b'; c'; x'), the F_D values
// drawn from one shell kernel k built on (b', x'). r_in is max|x'|.
inline EdResult ed_outer_sum(ShellKernel& k, double r_in, double a, double b1, double c, double c_prime, double x1,
                             const SeriesConfig& cfg, const char* name) {
  const bool terminating = is_nonpositive_integer(b1) || is_nonpositive_integer(a) || x1 == 0.0;
  const double rho = std::fabs(x1) / (1.0 - r_in);
  const double tail = rho < 1.0 ? 1.0 / (1.0 - rho) : 1.0;
  double i_min = 0.0;
  if (!terminating && rho > 0.0) {
    double ex = a + b1 - c;
    if (ex > 1.0) i_min = (ex - 1.0) / -std::log(rho);
  }
  if (a < 0) i_min = std::max(i_min, std::ceil(-a) + 2.0);

  long double coef = 1.0L;
  CompensatedSum<long double> acc;
  EdResult out;
  int quiet = 0;
  for (std::int64_t i = 0;; ++i) {
    if (i >= cfg.max_index_per_dim) throw NonConvergence(std::string(name) + ": outer index cap reached");
    ShellSum f = sum_shells(k, a + static_cast<double>(i), c_prime, ShellWeight::lauricella, cfg, name);
    out.shells = std::max<std::int64_t>(out.shells, f.shells);
    long double t = coef * f.value();
    acc.add(t);
    out.outer_terms = i + 1;
    coef *= (static_cast<long double>(a) + i) * (b1 + i) * x1 / ((c + i) * (i + 1.0L));
    if (coef == 0.0L) break;
    if (static_cast<double>(i) >= i_min) {
      long double tol = cfg.abs_tol + cfg.rel_tol * std::fabs(acc.value());
      if (std::fabs(t) * tail <= tol) {
        if (++quiet >= 3) break;
      } else {
        quiet = 0;
      }
    }
  }
  out.value = static_cast<double>(acc.value());
  return out;
}

// E_D^(N) as a single sum of F_D^(N-1) values sharing one shell kernel.
inline EdResult ed_function_detail(const EdArgs& e, const SeriesConfig& cfg = {}) {
  cfg.validate();
  if (e.b.size() != e.x.size() || e.b.empty()) throw InvalidParameter("ed_function: length(b) != length(x) or empty");
  if (is_nonpositive_integer(e.c) || is_nonpositive_integer(e.c_prime))
    throw InvalidParameter("ed_function: c or c' is a nonpositive integer");
  std::vector<double> b2(e.b.begin() + 1, e.b.end()), x2(e.x.begin() + 1, e.x.end());
  const double r_in = detail::max_abs(x2);
  if (!(std::fabs(e.x[0]) + r_in < 1.0)) throw DomainError("ed_function: arguments outside the convergence region");
  ShellKernel k(b2, x2);
  return ed_outer_sum(k, r_in, e.a, e.b[0], e.c, e.c_prime, e.x[0], cfg, "ed_function");
}

inline double ed_function(const EdArgs& e, const SeriesConfig& cfg = {}) { return ed_function_detail(e, cfg).value; }

}  // namespace kmsf
