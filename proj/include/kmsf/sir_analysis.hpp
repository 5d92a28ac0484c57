#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "kmsf/errors.hpp"
#include "kmsf/fading.hpp"
#include "kmsf/geometry.hpp"
#include "kmsf/hypergeom.hpp"
#include "kmsf/quadrature.hpp"

namespace kmsf {

enum class OutageMethod { ed_form, fd_series, eta_mu, hoyt, kappa_mu_soi, cf_inversion };

inline const char* method_name(OutageMethod m) {
  switch (m) {
    case OutageMethod::ed_form: return "ed_form";
    case OutageMethod::fd_series: return "fd_series";
    case OutageMethod::eta_mu: return "eta_mu";
    case OutageMethod::hoyt: return "hoyt";
    case OutageMethod::kappa_mu_soi: return "kappa_mu_soi";
    case OutageMethod::cf_inversion: return "cf_inversion";
  }
  return "?";
}

struct OutageResult {
  double value = 0.0;
  std::int64_t terms_used = 0;
  double error_bound = 0.0;
  OutageMethod method = OutageMethod::fd_series;
  // Second evaluation route, when the operation computes one (eta-mu direct form).
  double cross_check = std::numeric_limits<double>::quiet_NaN();
};

struct TruncationBound {
  double value = 0.0;
  bool heuristic = false;  // mixed-sign slot parameters: the F_D comparison step is not guaranteed
  int regime = 0;          // 1, 2, or 3 when the tighter of both was taken
  double case_i = 0.0;
  double case_ii = 0.0;
  // Remaining SoI mixture mass sum_{p>P} w_p. Every series bracket is a probability, so
  // this bounds the truncation error without further assumptions.
  double mixture_tail = 0.0;
};

namespace detail {

// One Gamma-type factor (1 + s u)^{-b} of the interference Laplace transform.
struct Slot {
  double b;
  double s;
};

// The SoI as a mixture over p of Gamma(mu + p, theta) with weights w_p.
struct SoiModel {
  double theta, lambda, mu, m, mukappa;
  bool poisson() const { return std::isinf(m); }
  double q() const { return 1.0 - theta / lambda; }
};

inline SoiModel soi_model(const FadingProfile& p) { return {p.theta, p.lambda, p.mu, p.m, p.mu * p.kappa}; }

inline std::vector<Slot> merge_slots(std::vector<Slot> v) {
  std::sort(v.begin(), v.end(), [](const Slot& l, const Slot& r) { return l.s < r.s; });
  std::vector<Slot> out;
  for (const Slot& s : v) {
    if (!out.empty() && out.back().s == s.s)
      out.back().b += s.b;
    else
      out.push_back(s);
  }
  out.erase(std::remove_if(out.begin(), out.end(), [](const Slot& s) { return s.b == 0.0; }), out.end());
  return out;
}

inline std::vector<Slot> interferer_slots(const std::vector<FadingProfile>& in) {
  if (in.empty()) throw InvalidParameter("SirProblem: at least one interferer is required");
  std::vector<Slot> v;
  for (const auto& f : in) {
    if (f.kappa_mu_limit()) throw InvalidParameter("SirProblem: interferer m must be finite");
    if (f.theta == f.lambda) {
      v.push_back({f.mu, f.theta});
    } else {
      v.push_back({f.mu - f.m, f.theta});
      v.push_back({f.m, f.lambda});
    }
  }
  return merge_slots(v);
}

inline std::vector<Slot> eta_mu_slots(const std::vector<EtaMuParams>& in) {
  if (in.empty()) throw InvalidParameter("eta-mu: at least one interferer is required");
  std::vector<Slot> v;
  for (const auto& e : in) {
    v.push_back({e.mu_bar, e.a1()});
    v.push_back({e.mu_bar, e.a2()});
  }
  return merge_slots(v);
}

inline double slot_sum(const std::vector<Slot>& v) {
  double s = 0.0;
  for (const auto& x : v) s += x.b;
  return s;
}

// w_p = (theta/lambda)^m (m)_p q^p / p!, or the Poisson(mu kappa) pmf in the kappa-mu limit.
class MixtureWeights {
 public:
  explicit MixtureWeights(const SoiModel& s) : soi_(s) {
    if (s.poisson()) {
      w_ = {-s.mukappa, 1};
    } else {
      w_ = {s.m * std::log(s.theta / s.lambda), 1};
    }
  }
  SignedLog current() const { return w_; }
  std::int64_t index() const { return p_; }
  void advance() {
    double ratio = soi_.poisson() ? soi_.mukappa / (p_ + 1.0) : (soi_.m + p_) * soi_.q() / (p_ + 1.0);
    w_ = w_ * SignedLog::from(ratio);
    ++p_;
  }

 private:
  SoiModel soi_;
  SignedLog w_;
  std::int64_t p_ = 0;
};

struct CoverageValue {
  double coverage = 0.0;
  std::int64_t terms = 0;
  std::int64_t shells = 0;
  double rounding = 0.0;  // estimated cancellation error, non-terminating brackets only
};

inline constexpr double kRoundingLimit = 1e-9;

// Terminating brackets F_D(-n, b; 1+S; x) after moving the largest argument x_k to
// x_k/(x_k - 1): every new argument is <= 0 and b_k becomes 1, so (-n)_i z^i keeps one
// sign and the shells need no cancellation. Returns log F_D(-n, b; 1+S; x).
class TerminatingBracket {
 public:
  TerminatingBracket(double theta, const std::vector<Slot>& slots, double T) : c_(1.0 + slot_sum(slots)) {
    std::size_t k = 0;
    for (std::size_t j = 1; j < slots.size(); ++j)
      if (slots[j].s < slots[k].s) k = j;
    const double sk = slots[k].s;
    log_one_minus_xk_ = std::log(T * sk / (theta + T * sk));
    std::vector<double> b, z;
    for (std::size_t j = 0; j < slots.size(); ++j) {
      b.push_back(j == k ? 1.0 : slots[j].b);
      z.push_back(j == k ? -theta / (T * sk) : theta * (sk - slots[j].s) / (sk * (theta + T * slots[j].s)));
    }
    double rho = 0.0;
    for (double v : z) rho = std::max(rho, std::fabs(v));
    rho_ = rho > 0.0 ? rho : 1.0;
    kernel_ = ShellKernel(b, z, rho_);
  }

  // log of (1 - x_k)^n F_D(-n, b'; c; z) = log F_D(-n, b; c; x)
  SignedLog log_value(std::int64_t n) {
    // Linear long double first; the log-domain pass handles overflow.
    long double acc = 0.0L, w = 1.0L;
    const long double rho = rho_;
    for (std::int64_t i = 0; i <= n; ++i) {
      acc += w * kernel_.h(static_cast<std::size_t>(i));
      w *= rho * (static_cast<long double>(i) - n) / (c_ + i);
    }
    if (std::isfinite(acc) && acc != 0.0L)
      return {static_cast<double>(std::log(std::fabs(acc)) + n * log_one_minus_xk_), acc > 0 ? 1 : -1};
    return log_value_scaled(n);
  }

 private:
  SignedLog log_value_scaled(std::int64_t n) {
    long double acc = 0.0L, shift = 0.0L;
    bool started = false;
    long double lw = 0.0L;
    int sw = 1;
    const long double lr = std::log(static_cast<long double>(rho_));
    for (std::int64_t i = 0; i <= n; ++i) {
      long double h = kernel_.h(static_cast<std::size_t>(i));
      if (h != 0.0L) {
        long double lt = lw + i * lr + std::log(std::fabs(h));
        int st = sw * (h > 0 ? 1 : -1);
        if (!started) {
          shift = lt;
          started = true;
        } else if (lt > shift) {
          acc *= std::exp(shift - lt);
          shift = lt;
        }
        acc += st * std::exp(lt - shift);
      }
      long double f = (static_cast<long double>(i) - n) / (c_ + i);
      if (f == 0.0L) break;
      lw += std::log(std::fabs(f));
      if (f < 0) sw = -sw;
    }
    if (!started || acc == 0.0L) return {};
    return {static_cast<double>(std::log(std::fabs(acc)) + shift + n * log_one_minus_xk_), acc > 0 ? 1 : -1};
  }

  double c_;
  double rho_ = 1.0;
  double log_one_minus_xk_ = 0.0;
  ShellKernel kernel_;
};

// Non-terminating brackets after the same pivot on the smallest slot scale s_k, with
// rN = theta/(theta + T s_k), r1 = 1 - rN and x'_j = rN (1 - s_k/s_j), all in [0, 1):
//   P(Gamma(nu, theta) > T I) = K r1^{S+nu} F_D(S+nu, b'; 1+S; x'),  b'_k = 1, x'_k = rN
//   P(Gamma(nu, theta) < T I) = K' r1^nu rN^S prod_{j!=k} (s_k/s_j)^{b_j}
//                               E_D(S+nu; 1, b_{-k}; nu+1, S; r1, x'_{-k})
// Each interferer's slot pair contributes positive shell coefficients, so neither form
// cancels. The first converges at rate rN, the second at roughly r1/(1 - max x'_{-k});
// the cheaper one is tried first. Kernels do not depend on nu.
class PivotBracket {
 public:
  PivotBracket(double theta, const std::vector<Slot>& slots, double T) : S_(slot_sum(slots)) {
    std::size_t k = 0;
    for (std::size_t j = 1; j < slots.size(); ++j)
      if (slots[j].s < slots[k].s) k = j;
    const double sk = slots[k].s;
    rN_ = theta / (theta + T * sk);
    r1_ = T * sk / (theta + T * sk);
    log_k0_ = -log_gamma(1.0 + S_) + S_ * std::log(theta / T);
    log_c0_ = -log_gamma(S_) + S_ * std::log(rN_);
    std::vector<double> b, x, bc, xc;
    for (std::size_t j = 0; j < slots.size(); ++j) {
      log_k0_ -= slots[j].b * std::log(slots[j].s);
      const double xj = j == k ? rN_ : rN_ * (1.0 - sk / slots[j].s);
      b.push_back(j == k ? 1.0 : slots[j].b);
      x.push_back(xj);
      if (j == k) continue;
      log_c0_ += slots[j].b * std::log(sk / slots[j].s);
      bc.push_back(slots[j].b);
      xc.push_back(xj);
      r_in_ = std::max(r_in_, xj);
    }
    coverage_kernel_ = ShellKernel(b, x);
    complement_kernel_ = ShellKernel(bc, xc);
    const double tol = std::log(1e12);
    const double rho = r1_ / (1.0 - r_in_);
    const double cost_coverage = tol / -std::log(rN_);
    const double cost_complement = rho < 1.0 ? (tol / -std::log(rho) + 1.0) * (tol / (1.0 - r_in_)) : INFINITY;
    complement_first_ = cost_complement < cost_coverage;
  }

  // P(Gamma(nu, theta) > T I) and the log of the largest summed term, for rounding estimates.
  std::pair<long double, double> value(double nu, const SeriesConfig& cfg, std::int64_t& shells) {
    if (!complement_first_) {
      try {
        return coverage(nu, cfg, shells);
      } catch (const NonConvergence&) {
        return complement(nu, cfg, shells);
      }
    }
    try {
      return complement(nu, cfg, shells);
    } catch (const NonConvergence&) {
      return coverage(nu, cfg, shells);
    }
  }

 private:
  std::pair<long double, double> coverage(double nu, const SeriesConfig& cfg, std::int64_t& shells) {
    ShellSum f = sum_shells(coverage_kernel_, S_ + nu, 1.0 + S_, ShellWeight::lauricella, cfg, "outage_series");
    shells = f.shells;
    const double lk = log_k0_ + log_gamma(S_ + nu) - log_gamma(nu) + (S_ + nu) * std::log(r1_);
    return {f.mantissa * std::exp(f.log_scale + static_cast<long double>(lk)), static_cast<double>(f.log_max_term) + lk};
  }

  std::pair<long double, double> complement(double nu, const SeriesConfig& cfg, std::int64_t& shells) {
    EdResult e = ed_outer_sum(complement_kernel_, r_in_, S_ + nu, 1.0, nu + 1.0, S_, r1_, cfg, "outage_series");
    shells = e.shells;
    const double lc = log_c0_ + log_gamma(S_ + nu) - log_gamma(nu + 1.0) + nu * std::log(r1_);
    const long double out = std::exp(static_cast<long double>(lc)) * e.value;
    return {1.0L - out, std::log(std::max(1.0L, out))};
  }

  double S_;
  double rN_ = 0.0, r1_ = 0.0, r_in_ = 0.0;
  double log_k0_ = 0.0, log_c0_ = 0.0;
  bool complement_first_ = false;
  ShellKernel coverage_kernel_, complement_kernel_;
};

// Coverage P(g > T I) as sum_p w_p P(Gamma(mu+p, theta) > T I). Each bracket is
// Gamma(S+p+mu)/(Gamma(mu+p)Gamma(1+S)) prod x_j^{b_j} F_D(1-p-mu, b; 1+S; x), evaluated
// through TerminatingBracket for integer mu and PivotBracket otherwise.
// A bracket is a probability, so it is clamped to [0, 1]; once the remaining
// mixture mass is below abs_tol/100 further terms cannot matter. If the rounding
// accumulated over the brackets could reach kRoundingLimit the evaluation is refused.
inline CoverageValue coverage_series(const SoiModel& soi, const std::vector<Slot>& slots, double T, std::int64_t P,
                                     const SeriesConfig& cfg) {
  if (P < 0) throw InvalidParameter("outage_series: P must be >= 0");
  if (P > cfg.max_index_per_dim) throw NonConvergence("outage_series: P exceeds max_index_per_dim");
  const double S = slot_sum(slots);
  double log_x = 0.0;
  for (const auto& sl : slots) log_x += sl.b * std::log(soi.theta / (soi.theta + T * sl.s));
  const bool terminating = is_nonpositive_integer(1.0 - soi.mu);
  std::optional<TerminatingBracket> term;
  std::optional<PivotBracket> pivot;
  if (terminating)
    term.emplace(soi.theta, slots, T);
  else
    pivot.emplace(soi.theta, slots, T);
  MixtureWeights w(soi);
  const double lg1s = log_gamma(1.0 + S);
  CompensatedSum<long double> acc, mass;
  CoverageValue out;
  for (std::int64_t p = 0; p <= P; ++p) {
    SignedLog wp = w.current();
    if (wp.sign == 0) break;
    if (p > 0 && 1.0L - mass.value() < 0.01L * cfg.abs_tol) break;
    long double bracket;
    if (terminating) {
      const double lg = log_gamma(S + p + soi.mu) - log_gamma(soi.mu + p) - lg1s + log_x;
      SignedLog f = term->log_value(p + static_cast<std::int64_t>(std::lround(soi.mu)) - 1);
      bracket = f.sign * std::exp(static_cast<long double>(f.log_abs + lg));
      out.shells = std::max<std::int64_t>(out.shells, p + std::lround(soi.mu));
    } else {
      std::int64_t shells = 0;
      auto [v, log_max] = pivot->value(soi.mu + static_cast<double>(p), cfg, shells);
      bracket = v;
      out.rounding += 1e-17 * std::exp(log_max + wp.log_abs);
      if (out.rounding > kRoundingLimit)
        throw NonConvergence("outage_series: cancellation in mixture term p=" + std::to_string(p));
      out.shells = std::max<std::int64_t>(out.shells, shells);
    }
    bracket = std::clamp(bracket, 0.0L, 1.0L);
    long double weight = wp.sign * std::exp(static_cast<long double>(wp.log_abs));
    acc.add(weight * bracket);
    mass.add(weight);
    out.terms = p;
    w.advance();
  }
  out.coverage = static_cast<double>(acc.value());
  return out;
}

// Coverage through the E_D form: K r1^{S+mu} E_D(S+mu; m, b'; mu, 1+S; q r1, x').
// The pivot slot k is the smallest scale, which keeps |x_1| + max|x'| = |q| r1 + rN < 1.
inline CoverageValue coverage_ed(const SoiModel& soi, const std::vector<Slot>& slots, double T,
                                 const SeriesConfig& cfg) {
  if (soi.poisson()) throw InvalidParameter("outage_ed: SoI m must be finite");
  const double S = slot_sum(slots);
  std::size_t k = 0;
  for (std::size_t j = 1; j < slots.size(); ++j)
    if (slots[j].s < slots[k].s) k = j;
  const double sk = slots[k].s;
  const double rN = soi.theta / (soi.theta + T * sk);
  const double r1 = T * sk / (soi.theta + T * sk);
  EdArgs e;
  e.a = S + soi.mu;
  e.c = soi.mu;
  e.c_prime = 1.0 + S;
  e.b.push_back(soi.m);
  e.x.push_back(soi.q() * r1);
  double log_k = log_gamma(S + soi.mu) - log_gamma(1.0 + S) - log_gamma(soi.mu) + S * std::log(soi.theta) +
                 soi.m * std::log(soi.theta / soi.lambda) - S * std::log(T) + (S + soi.mu) * std::log(r1);
  for (std::size_t j = 0; j < slots.size(); ++j) {
    log_k -= slots[j].b * std::log(slots[j].s);
    if (j == k) {
      e.b.push_back(1.0);
      e.x.push_back(rN);
    } else {
      e.b.push_back(slots[j].b);
      e.x.push_back(rN * (1.0 - sk / slots[j].s));
    }
  }
  EdResult r = ed_function_detail(e, cfg);
  return {std::exp(log_k) * r.value, r.outer_terms, r.shells};
}

// log(1 + i e^z), formed without e^z so extreme scale products cannot overflow.
inline std::complex<double> log1p_i_exp(double z) {
  if (z > 0.0) return {z + 0.5 * std::log1p(std::exp(-2.0 * z)), 0.5 * M_PI - std::atan(std::exp(-z))};
  return {0.5 * std::log1p(std::exp(2.0 * z)), std::atan(std::exp(z))};
}

// Gil-Pelaez inversion of the characteristic function of g - T I, integrated in
// log-frequency v with every scale carried as a logarithm.
inline double coverage_cf(const SoiModel& soi, const std::vector<Slot>& slots, double T) {
  using cd = std::complex<double>;
  const double lth = std::log(soi.theta), lla = std::log(soi.lambda), lT = std::log(T);
  auto log_phi = [&](double v) {
    cd r;
    if (soi.poisson()) {
      // -mu log(1 - i a) + mu kappa (i a / (1 - i a)) with a = theta w
      const double a = std::exp(lth + v);
      r = -soi.mu * std::conj(log1p_i_exp(lth + v)) +
          (std::isfinite(a) ? soi.mukappa * cd(-a * a, a) / (1.0 + a * a) : cd(-soi.mukappa, 0.0));
    } else {
      r = (soi.m - soi.mu) * std::conj(log1p_i_exp(lth + v)) - soi.m * std::conj(log1p_i_exp(lla + v));
    }
    for (const auto& sl : slots) r -= sl.b * log1p_i_exp(lT + std::log(sl.s) + v);
    return r;
  };
  std::vector<double> log_scales{lth, lla};
  for (const auto& sl : slots) log_scales.push_back(lT + std::log(sl.s));
  const double lmax = *std::max_element(log_scales.begin(), log_scales.end());
  const double lmin = *std::min_element(log_scales.begin(), log_scales.end());
  const double decay = std::min(1.0, soi.mu + slot_sum(slots));
  const double lo = -lmax - 40.0;
  const double hi = -lmin + std::min(400.0, 45.0 / decay);
  std::vector<double> breaks;
  for (double l : log_scales) breaks.push_back(-l);
  std::sort(breaks.begin(), breaks.end());
  auto f = [&](double v) { return std::exp(log_phi(v)).imag(); };
  QuadResult q = integrate(f, lo, hi, 1e-15, 1e-13, 20000, breaks);
  if (!q.converged) throw QuadratureFailure("cf inversion: tolerance not reached");
  return 0.5 + q.value / M_PI;
}

inline OutageResult outage_from_coverage(double coverage, std::int64_t terms, double bound, OutageMethod m) {
  return {std::clamp(1.0 - coverage, 0.0, 1.0), terms, bound, m};
}

inline void check_problem(const SirProblem& p) {
  if (!(p.T > 0.0) || !std::isfinite(p.T)) throw InvalidParameter("SirProblem: T must be > 0");
  if (p.interferers.empty()) throw InvalidParameter("SirProblem: at least one interferer is required");
}

}  // namespace detail

// F_I(y) = prod s_j^{-b_j} y^S / Gamma(1+S) Phi2(b; 1+S; -y/s_j).
inline double interference_cdf(const std::vector<FadingProfile>& interferers, double y, const SeriesConfig& cfg = {}) {
  if (!(y >= 0.0)) throw InvalidParameter("interference_cdf: y must be >= 0");
  auto slots = detail::interferer_slots(interferers);
  if (y == 0.0) return 0.0;
  const double S = detail::slot_sum(slots);
  std::vector<double> b, x;
  double l = S * std::log(y) - log_gamma(1.0 + S);
  for (const auto& s : slots) {
    b.push_back(s.b);
    x.push_back(-y / s.s);
    l -= s.b * std::log(s.s);
  }
  SignedLog f = log_phi2_n(b, 1.0 + S, x, cfg);
  return std::clamp(f.sign * std::exp(l + f.log_abs), 0.0, 1.0);
}

// Closed-form bound on the tail sum_{p > P} of the outage series. Each candidate
// argument z = theta/(theta + T s_j) is tried and the largest bound is reported.
inline TruncationBound truncation_bound_detail(const SirProblem& pr, std::int64_t P) {
  detail::check_problem(pr);
  if (P < 0) throw InvalidParameter("truncation_bound: P must be >= 0");
  auto slots = detail::interferer_slots(pr.interferers);
  auto soi = detail::soi_model(pr.soi);
  TruncationBound out;
  for (const auto& s : slots)
    if (s.b < 0) out.heuristic = true;
  const double q = soi.poisson() ? 0.0 : soi.q();
  out.mixture_tail = soi.poisson() ? boost::math::gamma_p(static_cast<double>(P) + 1.0, soi.mukappa)
                                   : boost::math::ibetac(soi.m, static_cast<double>(P) + 1.0, soi.theta / soi.lambda);
  if (!soi.poisson() && q == 0.0) return out;
  if (soi.poisson() && soi.mukappa == 0.0) return out;
  const double S = detail::slot_sum(slots);
  const double mu = soi.mu, T = pr.T;
  double log_x = 0.0;
  for (const auto& s : slots) log_x += s.b * std::log(soi.theta / (soi.theta + T * s.s));
  const double Pd = static_cast<double>(P);

  // Tail sum_{p>P} of w_p Gamma(S+p+mu)/(Gamma(mu+p)Gamma(1+S)) prod x^b y^{p+mu-1}, y in (0,1],
  // with the extra (1-z)^{-S} factor handled by the caller.
  auto tail = [&](double y) -> double {
    if (soi.poisson()) {
      CompensatedSum<double> acc;
      double lw = -soi.mukappa - log_gamma(Pd + 2.0) + (Pd + 1.0) * std::log(soi.mukappa);
      for (double p = Pd + 1.0;; p += 1.0) {
        double t = std::exp(lw + log_gamma(S + p + mu) - log_gamma(mu + p) - log_gamma(1.0 + S) + log_x +
                            (p + mu - 1.0) * std::log(y));
        acc.add(t);
        if (p > soi.mukappa + 50.0 && t < 1e-30 * acc.value()) break;
        if (p > Pd + 1e5) break;
        lw += std::log(soi.mukappa) - std::log(p + 1.0);
      }
      return acc.value();
    }
    // K3 Gamma(P+m+1)Gamma(S+P+mu+1)/(Gamma(P+2)Gamma(mu+P+1)) q^{P+1} y^{P+mu} 3F2(1, P+m+1, S+P+mu+1; P+2, mu+P+1; q y)
    double lk3 = log_x + soi.m * std::log(soi.theta / soi.lambda) - log_gamma(1.0 + S) - log_gamma(soi.m);
    double l = lk3 + log_gamma(Pd + soi.m + 1.0) + log_gamma(S + Pd + mu + 1.0) - log_gamma(Pd + 2.0) -
               log_gamma(mu + Pd + 1.0) + (Pd + 1.0) * std::log(q) + (Pd + mu) * std::log(y);
    SeriesConfig c3;
    c3.rel_tol = 1e-12;
    double f = clausen_3f2(1.0, Pd + soi.m + 1.0, S + Pd + mu + 1.0, Pd + 2.0, mu + Pd + 1.0, q * y, c3);
    return std::exp(l) * f;
  };

  double b1 = 0.0, b2 = 0.0;
  for (const auto& s : slots) {
    const double one_minus_z = T * s.s / (soi.theta + T * s.s);
    // regime (i): F_D <= (1-z)^{-S}; the tail then carries y = 1 and loses the y^{mu-1}... factor
    b1 = std::max(b1, tail(1.0) * std::pow(one_minus_z, -S));
    // regime (ii): F_D ~ (1-z)^{p+mu-1}
    b2 = std::max(b2, tail(one_minus_z) / one_minus_z);
  }
  out.case_i = b1;
  out.case_ii = b2;
  if (S <= 1.0) {
    out.value = b1;
    out.regime = 1;
  } else if (S >= 4.0) {
    out.value = b2;
    out.regime = 2;
  } else {
    out.value = std::min(b1, b2);
    out.regime = 3;
  }
  return out;
}

inline double truncation_bound(const SirProblem& pr, std::int64_t P) { return truncation_bound_detail(pr, P).value; }

// Smallest P whose SoI mixture tail sum_{p>P} w_p is below eps.
inline std::int64_t mixture_terms(const FadingProfile& soi, double eps, const SeriesConfig& cfg) {
  const auto s = detail::soi_model(soi);
  for (std::int64_t P = 0; P <= cfg.max_index_per_dim; ++P) {
    const double tail = s.poisson() ? boost::math::gamma_p(P + 1.0, s.mukappa)
                                    : boost::math::ibetac(s.m, P + 1.0, s.theta / s.lambda);
    if (tail < eps) return P;
  }
  throw NonConvergence("outage_series: SoI mixture tail stays above epsilon within max_index_per_dim");
}

// Smallest P whose mixture tail is below eps and, unless flagged heuristic, whose
// closed-form bound is below eps as well.
inline std::int64_t auto_terms(const SirProblem& pr, double eps, const SeriesConfig& cfg) {
  for (std::int64_t P = 0; P <= cfg.max_index_per_dim; ++P) {
    auto b = truncation_bound_detail(pr, P);
    if (b.mixture_tail < eps && (b.heuristic || b.value < eps)) return P;
  }
  throw NonConvergence("outage_series: truncation bound stays above epsilon within max_index_per_dim");
}

// Outage through the mixture-indexed F_D series, truncated after P terms (nullopt: auto).
inline OutageResult outage_series(const SirProblem& pr, std::optional<std::int64_t> P = 50,
                                  const SeriesConfig& cfg = {}, double eps = 1e-6) {
  detail::check_problem(pr);
  cfg.validate();
  auto slots = detail::interferer_slots(pr.interferers);
  std::int64_t terms = P ? *P : auto_terms(pr, eps, cfg);
  auto cv = detail::coverage_series(detail::soi_model(pr.soi), slots, pr.T, terms, cfg);
  auto m = pr.soi.kappa_mu_limit() ? OutageMethod::kappa_mu_soi : OutageMethod::fd_series;
  // The closed-form bound can undershoot; the mixture tail cannot.
  auto tb = truncation_bound_detail(pr, terms);
  return detail::outage_from_coverage(cv.coverage, terms, std::max(tb.value, tb.mixture_tail), m);
}

inline OutageResult outage_ed(const SirProblem& pr, const SeriesConfig& cfg = {}) {
  detail::check_problem(pr);
  cfg.validate();
  auto slots = detail::interferer_slots(pr.interferers);
  auto cv = detail::coverage_ed(detail::soi_model(pr.soi), slots, pr.T, cfg);
  return detail::outage_from_coverage(cv.coverage, cv.terms, 0.0, OutageMethod::ed_form);
}

// SoI in the kappa-mu limit (m -> inf): Poisson(mu kappa) mixture weights.
inline OutageResult outage_soi_kappa_mu(const SirProblem& pr, const SeriesConfig& cfg = {},
                                        std::optional<std::int64_t> P = 50) {
  detail::check_problem(pr);
  SirProblem q = pr;
  if (!q.soi.kappa_mu_limit()) q.soi = make_kappa_mu_profile(pr.soi.kappa, pr.soi.mu, pr.soi.mean_power);
  auto r = outage_series(q, P, cfg);
  r.method = OutageMethod::kappa_mu_soi;
  return r;
}

inline OutageResult outage_cf_inversion(const SirProblem& pr) {
  detail::check_problem(pr);
  auto slots = detail::interferer_slots(pr.interferers);
  double c = detail::coverage_cf(detail::soi_model(pr.soi), slots, pr.T);
  return detail::outage_from_coverage(c, 0, 0.0, OutageMethod::cf_inversion);
}

// Series first; characteristic-function inversion when the shell count needed by the
// series exceeds the budget (user very close to its site, non-integer SoI mu).
inline OutageResult outage_auto(const SirProblem& pr, const SeriesConfig& cfg = {},
                                std::optional<std::int64_t> P = std::nullopt) {
  detail::check_problem(pr);
  try {
    return outage_series(pr, P ? *P : mixture_terms(pr.soi, cfg.abs_tol, cfg), cfg);
  } catch (const NonConvergence&) {
    return outage_cf_inversion(pr);
  }
}

// Eta-mu direct form: SoI components Gamma(mu_bar, a2) in the theta role and Gamma(mu_bar, a1) in
// the lambda role, interferers as slots (mu_bar_i, beta). The roles are swapped when |1 - a2/a1| >= 1,
// which is outside the series region.
inline OutageResult outage_eta_mu_direct(const EtaMuParams& soi, const std::vector<EtaMuParams>& interferers, double T,
                                         const SeriesConfig& cfg = {}) {
  if (!(T > 0.0)) throw InvalidParameter("outage_eta_mu: T must be > 0");
  auto slots = detail::eta_mu_slots(interferers);
  double th = soi.a2(), la = soi.a1();
  if (!(std::fabs(1.0 - th / la) < 1.0)) std::swap(th, la);
  detail::SoiModel s{th, la, 2.0 * soi.mu_bar, soi.mu_bar, 0.0};
  auto cv = detail::coverage_ed(s, slots, T, cfg);
  return detail::outage_from_coverage(cv.coverage, cv.terms, 0.0, OutageMethod::eta_mu);
}

inline OutageResult outage_eta_mu(const EtaMuParams& soi, const std::vector<EtaMuParams>& interferers, double T,
                                  const SeriesConfig& cfg = {}) {
  SirProblem pr{from_eta_mu(soi), {}, T};
  for (const auto& e : interferers) pr.interferers.push_back(from_eta_mu(e));
  OutageResult r = outage_ed(pr, cfg);
  r.method = OutageMethod::eta_mu;
  r.cross_check = outage_eta_mu_direct(soi, interferers, T, cfg).value;
  return r;
}

// Hoyt SoI: one F_D with first parameter 1/2,
// coverage = (theta/lambda)^{1/2} prod (theta/(T s_j + theta))^{b_j}
//            F_D(1/2; b_1..b_J, 1; 1; (lambda-theta) T s_j / (lambda (T s_j + theta)), 1 - theta/lambda)
// with theta <= lambda the two component scales of the SoI.
inline OutageResult outage_hoyt(double q, double soi_mean, const std::vector<EtaMuParams>& interferers, double T,
                                const SeriesConfig& cfg = {}) {
  if (!(q > 0.0 && q <= 1.0)) throw InvalidParameter("outage_hoyt: q must be in (0, 1]");
  if (!(T > 0.0)) throw InvalidParameter("outage_hoyt: T must be > 0");
  EtaMuParams e = make_eta_mu(q * q, 0.5, soi_mean);
  const double th = std::min(e.a1(), e.a2()), la = std::max(e.a1(), e.a2());
  auto slots = detail::eta_mu_slots(interferers);
  FdArgs f{0.5, {}, 1.0, {}};
  double l = 0.5 * std::log(th / la);
  for (const auto& s : slots) {
    f.b.push_back(s.b);
    f.x.push_back((la - th) * T * s.s / (la * (T * s.s + th)));
    l += s.b * std::log(th / (T * s.s + th));
  }
  f.b.push_back(1.0);
  f.x.push_back(1.0 - th / la);
  for (double x : f.x)
    if (x >= 1.0) throw DomainError("outage_hoyt: F_D argument >= 1");
  SignedLog v = log_lauricella_fd(f, cfg);
  return detail::outage_from_coverage(v.sign * std::exp(v.log_abs + l), 0, 0.0, OutageMethod::hoyt);
}

namespace detail {

// int_0^inf C(e^t - 1) dt = int C(e^v) e^v/(1 + e^v) dv over v = log T. In v the coverage
// changes over O(1) widths around log(theta/s_j) whatever the SIR scale, which a t-grid
// anchored at 0 can miss entirely when theta/s_j is tiny. Below v_lo the coverage is 1 to
// within e^-40 and that piece is added in closed form.
template <class Cov>
QuadResult rate_quadrature(Cov&& coverage_at, double theta, const std::vector<Slot>& slots) {
  std::vector<double> breaks{0.0};
  double v_min = 0.0;
  for (const auto& s : slots) {
    const double v = std::log(theta / s.s);
    breaks.push_back(v);
    v_min = std::min(v_min, v);
  }
  const double v_lo = v_min - 40.0;
  std::sort(breaks.begin(), breaks.end());
  auto g = [&](double v) {
    const double T = std::exp(v);
    if (!std::isfinite(T)) return 0.0;
    return coverage_at(T) / (1.0 + std::exp(-v));
  };
  QuadResult q = integrate_to_infinity(g, v_lo, 1e-11, 1e-10, 8000, breaks);
  q.value += std::log1p(std::exp(v_lo));
  return q;
}

inline void require_integer_mu(const FadingProfile& soi, const char* op) {
  if (std::fabs(soi.mu - std::round(soi.mu)) > 1e-12 || soi.mu < 1.0)
    throw InvalidParameter(std::string(op) + ": SoI mu must be a positive integer");
}

// For integer SoI mu each mixture bracket is a terminating F_D polynomial in x(T), so the
// truncated coverage C_P(T) is a finite expression at every threshold. The rate is
// int_0^inf C_P(e^t - 1) dt.
inline double rate_series(const SirProblem& pr, std::optional<std::int64_t> P_opt, const SeriesConfig& cfg) {
  check_problem(pr);
  require_integer_mu(pr.soi, "rate_shadowed");
  const std::int64_t P = P_opt ? *P_opt : mixture_terms(pr.soi, cfg.rel_tol, cfg);
  if (P < 0) throw InvalidParameter("rate_shadowed: P must be >= 0");
  auto slots = interferer_slots(pr.interferers);
  auto soi = soi_model(pr.soi);
  soi.mu = std::round(soi.mu);
  QuadResult q = rate_quadrature(
      [&](double T) { return coverage_series(soi, slots, T, P, cfg).coverage; }, soi.theta, slots);
  if (!q.converged)
    throw NonConvergence("rate_shadowed: rate integral did not converge (error " + std::to_string(q.error) + ")");
  return q.value;
}

}  // namespace detail

// P defaults to the smallest truncation whose SoI mixture tail is below cfg.rel_tol; each
// dropped term contributes at most its weight times a per-term rate of a few nats.
inline double rate_shadowed(const SirProblem& pr, std::optional<std::int64_t> P = std::nullopt,
                            const SeriesConfig& cfg = {}) {
  return detail::rate_series(pr, P, cfg);
}

inline double rate_kappa_mu(const SirProblem& pr, std::optional<std::int64_t> P = std::nullopt,
                            const SeriesConfig& cfg = {}) {
  SirProblem q = pr;
  if (!q.soi.kappa_mu_limit()) q.soi = make_kappa_mu_profile(pr.soi.kappa, pr.soi.mu, pr.soi.mean_power);
  return detail::rate_series(q, P, cfg);
}

// Literal multi-index form of the rate: every multi-index i with |i| <= p+mu-1 contributes
// prod (b_j)_{i_j}/i_j! * eta_t with eta = b + i and
// eta_t = F_D(1, eta; sum(eta)+1; 1 - s_j/theta) / sum(eta).
// Exponential in the number of slots; intended for small configurations.
inline double rate_shadowed_enumerated(const SirProblem& pr, std::int64_t P, const SeriesConfig& cfg = {}) {
  detail::check_problem(pr);
  detail::require_integer_mu(pr.soi, "rate_shadowed_enumerated");
  auto slots = detail::interferer_slots(pr.interferers);
  auto soi = detail::soi_model(pr.soi);
  const int mu = static_cast<int>(std::lround(soi.mu));
  const double S = detail::slot_sum(slots);
  const std::size_t J = slots.size();
  const int nmax = static_cast<int>(P) + mu - 1;

  std::map<std::vector<int>, double> eta_cache;
  auto eta_t = [&](const std::vector<int>& idx) {
    auto it = eta_cache.find(idx);
    if (it != eta_cache.end()) return it->second;
    FdArgs f{1.0, {}, 0.0, {}};
    double H = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      double e = slots[j].b + idx[j];
      f.b.push_back(e);
      f.x.push_back(1.0 - slots[j].s / soi.theta);
      H += e;
    }
    f.c = H + 1.0;
    double v = lauricella_fd(f, cfg) / H;
    eta_cache.emplace(idx, v);
    return v;
  };

  // Z_n = sum_{|i| = n} prod (b_j)_{i_j}/i_j! eta_t(b + i)
  std::vector<long double> Z(nmax + 1, 0.0L);
  std::int64_t visited = 0;
  std::vector<int> idx(J, 0);
  std::function<void(std::size_t, int, long double)> walk = [&](std::size_t j, int left, long double coef) {
    if (j + 1 == J) {
      idx[j] = left;
      long double c = coef * pochhammer(slots[j].b, left) / std::tgamma(left + 1.0);
      int n = 0;
      for (int v : idx) n += v;
      Z[n] += c * eta_t(idx);
      if (++visited > 2'000'000) throw NonConvergence("rate_shadowed_enumerated: too many multi-indices");
      return;
    }
    for (int i = 0; i <= left; ++i) {
      idx[j] = i;
      walk(j + 1, left - i, coef * pochhammer(slots[j].b, i) / std::tgamma(i + 1.0));
    }
  };
  for (int n = 0; n <= nmax; ++n) walk(0, n, 1.0L);

  detail::MixtureWeights w(soi);
  const double lg1s = log_gamma(1.0 + S);
  CompensatedSum<long double> acc;
  for (std::int64_t p = 0; p <= P; ++p) {
    SignedLog wp = w.current();
    if (wp.sign == 0) break;
    const double a = 1.0 - static_cast<double>(p) - mu;
    long double inner = 0.0L, ratio = 1.0L;
    for (int n = 0; n <= p + mu - 1; ++n) {
      inner += ratio * Z[n];
      ratio *= (a + n) / (1.0L + S + n);
    }
    double lg = wp.log_abs + log_gamma(S + p + mu) - log_gamma(mu + p) - lg1s;
    acc.add(wp.sign * std::exp(static_cast<long double>(lg)) * inner);
    w.advance();
  }
  return static_cast<double>(acc.value());
}

// Independent rate check: int_0^inf P(SIR > e^t - 1) dt with the coverage from
// characteristic-function inversion.
inline double rate_integral_oracle(const SirProblem& pr) {
  detail::check_problem(pr);
  auto slots = detail::interferer_slots(pr.interferers);
  auto soi = detail::soi_model(pr.soi);
  QuadResult q = detail::rate_quadrature([&](double T) { return detail::coverage_cf(soi, slots, T); }, soi.theta, slots);
  if (!q.converged)
    throw QuadratureFailure("rate_integral_oracle: error " + std::to_string(q.error) + " above tolerance");
  return q.value;
}

// A cell scenario before path loss: per-site profiles carry the transmit-side mean.
struct CellScenario {
  NetworkLayout layout;
  double alpha = 4.0;
  double azimuth = 0.0;
  FadingProfile soi;
  std::vector<FadingProfile> interferers;  // one per interfering site, layout order
};

inline SirProblem problem_at(const CellScenario& sc, double r, double T) {
  return link_budget(place_user(sc.layout, r, sc.azimuth, sc.alpha), sc.soi, sc.interferers, T);
}

enum class Metric { outage, rate };

inline std::vector<double> uniform_radial_grid(double R, int points) {
  if (points < 2) throw InvalidParameter("radial grid: need at least 2 points");
  std::vector<double> g;
  for (int i = 1; i <= points; ++i) g.push_back(R * i / points);
  return g;
}

// int_0^R f(r) 2r/R^2 dr by the trapezoidal rule on the grid; r = 0 contributes zero weight.
inline double radial_average(const std::vector<double>& grid, double R, const std::function<double(double)>& f) {
  if (grid.empty() || grid.front() <= 0.0 || std::fabs(grid.back() - R) > 1e-9 * R)
    throw InvalidParameter("radial grid must cover (0, R]");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw InvalidParameter("radial grid must be increasing");
  double prev_r = 0.0, prev_f = 0.0, acc = 0.0;
  for (double r : grid) {
    double v = f(r) * 2.0 * r / (R * R);
    acc += 0.5 * (v + prev_f) * (r - prev_r);
    prev_r = r;
    prev_f = v;
  }
  return acc;
}

inline double typical_user(Metric metric, const CellScenario& sc, double T, const std::vector<double>& radial_grid,
                           const SeriesConfig& cfg = {}, std::optional<std::int64_t> P = std::nullopt) {
  return radial_average(radial_grid, sc.layout.R, [&](double r) {
    SirProblem pr = problem_at(sc, r, T);
    return metric == Metric::outage ? outage_auto(pr, cfg, P).value : rate_shadowed(pr, P, cfg);
  });
}

}  // namespace kmsf
