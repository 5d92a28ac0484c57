#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "kmsf/errors.hpp"
#include "kmsf/hypergeom.hpp"

namespace kmsf {

enum class Origin { native, kappa_mu, from_eta_mu, from_hoyt, from_rician_shadowed };

inline const char* origin_name(Origin o) {
  switch (o) {
    case Origin::native: return "native";
    case Origin::kappa_mu: return "kappa_mu";
    case Origin::from_eta_mu: return "from_eta_mu";
    case Origin::from_hoyt: return "from_hoyt";
    case Origin::from_rician_shadowed: return "from_rician_shadowed";
  }
  return "?";
}

// kappa-mu shadowed power distribution. m = +inf denotes the kappa-mu limit.
struct FadingProfile {
  double kappa = 0.0;
  double mu = 1.0;
  double m = 1.0;
  double mean_power = 1.0;
  double theta = 1.0;
  double lambda = 1.0;
  Origin origin = Origin::native;
  bool eta_folded = false;  // eta > 1 was folded to 1/eta
  bool large_m = false;     // m > 1e4: the kappa-mu limit form is numerically preferable

  bool kappa_mu_limit() const { return std::isinf(m); }
  // Mixture parameter q = 1 - theta/lambda = mu*kappa/(mu*kappa + m).
  double q() const { return kappa_mu_limit() ? 1.0 : mu * kappa / (mu * kappa + m); }
};

namespace detail {
inline void derive_scales(FadingProfile& p) {
  p.theta = p.mean_power / (p.mu * (1.0 + p.kappa));
  p.lambda = p.kappa_mu_limit() ? p.theta : (p.mu * p.kappa + p.m) * p.mean_power / (p.mu * (1.0 + p.kappa) * p.m);
  if (p.kappa == 0.0) p.lambda = p.theta;
}
}  // namespace detail

inline FadingProfile make_profile(double kappa, double mu, double m, double mean_power) {
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw InvalidParameter("make_profile: kappa must be >= 0");
  if (!(mu > 0.0) || !std::isfinite(mu)) throw InvalidParameter("make_profile: mu must be > 0");
  if (!(m > 0.0) || !std::isfinite(m)) throw InvalidParameter("make_profile: m must be > 0 and finite");
  if (!(mean_power > 0.0) || !std::isfinite(mean_power)) throw InvalidParameter("make_profile: mean_power must be > 0");
  FadingProfile p{kappa, mu, m, mean_power};
  p.large_m = m > 1e4;
  detail::derive_scales(p);
  return p;
}

inline FadingProfile make_kappa_mu_profile(double kappa, double mu, double mean_power) {
  FadingProfile p = make_profile(kappa, mu, 1.0, mean_power);
  p.m = std::numeric_limits<double>::infinity();
  p.origin = Origin::kappa_mu;
  detail::derive_scales(p);
  return p;
}

// Rician shadowed: mu = 1, Rician factor K, shadowing m.
inline FadingProfile make_rician_shadowed(double K, double m, double mean_power) {
  FadingProfile p = make_profile(K, 1.0, m, mean_power);
  p.origin = Origin::from_rician_shadowed;
  return p;
}

inline FadingProfile scaled(const FadingProfile& p, double factor) {
  if (!(factor > 0.0)) throw InvalidParameter("scaled: factor must be > 0");
  FadingProfile s = p;
  s.mean_power *= factor;
  detail::derive_scales(s);
  return s;
}

struct EtaMuParams {
  double eta = 1.0;
  double mu_bar = 0.5;
  double mean_power = 1.0;
  double h = 1.0;
  double H = 0.0;

  // Scales of the two Gamma(mu_bar, .) components making up the power.
  double a1() const { return mean_power / (2.0 * mu_bar * (h + H)); }
  double a2() const { return mean_power / (2.0 * mu_bar * (h - H)); }
};

inline EtaMuParams make_eta_mu(double eta, double mu_bar, double mean_power) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidParameter("make_eta_mu: eta must be in (0, inf)");
  if (!(mu_bar > 0.0) || !std::isfinite(mu_bar)) throw InvalidParameter("make_eta_mu: mu_bar must be > 0");
  if (!(mean_power > 0.0)) throw InvalidParameter("make_eta_mu: mean_power must be > 0");
  return {eta, mu_bar, mean_power, (2.0 + 1.0 / eta + eta) / 4.0, (1.0 / eta - eta) / 4.0};
}

inline FadingProfile from_eta_mu(const EtaMuParams& p) {
  if (!(p.eta > 0.0) || !(p.mu_bar > 0.0) || !(p.mean_power > 0.0))
    throw InvalidParameter("from_eta_mu: invalid eta-mu parameters");
  const bool fold = p.eta > 1.0;
  const double eta = fold ? 1.0 / p.eta : p.eta;
  FadingProfile f = make_profile((1.0 - eta) / (2.0 * eta), 2.0 * p.mu_bar, p.mu_bar, p.mean_power);
  f.origin = Origin::from_eta_mu;
  f.eta_folded = fold;
  return f;
}

inline FadingProfile from_hoyt(double q, double mean_power) {
  if (!(q > 0.0 && q <= 1.0)) throw InvalidParameter("from_hoyt: q must be in (0, 1]");
  FadingProfile f = from_eta_mu(make_eta_mu(q * q, 0.5, mean_power));
  f.origin = Origin::from_hoyt;
  return f;
}

// log of the density; -inf where the density vanishes.
inline double log_pdf(const FadingProfile& p, double x, const SeriesConfig& cfg = {}) {
  if (!(x >= 0.0)) throw InvalidParameter("pdf: x must be >= 0");
  if (x == 0.0) {
    if (p.mu > 1.0) return -std::numeric_limits<double>::infinity();
    if (p.mu < 1.0) return std::numeric_limits<double>::infinity();
  }
  const double lx = x == 0.0 ? 0.0 : std::log(x);
  if (p.kappa_mu_limit()) {
    // Poisson(mu kappa) mixture of Gamma(mu + p, theta): 0F1 form.
    double z = p.mu * p.kappa * x / p.theta;
    SignedLog f = detail::pfq_series<0, 1>({}, {p.mu}, z, cfg, "pdf");
    return -p.mu * p.kappa - x / p.theta + (p.mu - 1.0) * lx - p.mu * std::log(p.theta) - log_gamma(p.mu) + f.log_abs;
  }
  double z = x * (1.0 / p.theta - 1.0 / p.lambda);
  SignedLog f = log_kummer_1f1(p.m, p.mu, z, cfg);
  return (p.mu - 1.0) * lx - x / p.theta + f.log_abs - (p.mu - p.m) * std::log(p.theta) - p.m * std::log(p.lambda) -
         log_gamma(p.mu);
}

inline double pdf(const FadingProfile& p, double x, const SeriesConfig& cfg = {}) { return std::exp(log_pdf(p, x, cfg)); }

inline double cdf(const FadingProfile& p, double x, const SeriesConfig& cfg = {}) {
  if (!(x >= 0.0)) throw InvalidParameter("cdf: x must be >= 0");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  double v;
  if (p.kappa_mu_limit()) {
    // sum_k Pois(k; mu kappa) P(mu + k, x/theta)
    const double lam = p.mu * p.kappa;
    CompensatedSum<double> acc;
    double lw = -lam;
    for (int k = 0; k < 100000; ++k) {
      double t = std::exp(lw) * boost::math::gamma_p(p.mu + k, x / p.theta);
      acc.add(t);
      if (k > lam && t < 1e-17) break;
      if (lam == 0.0) break;
      lw += std::log(lam) - std::log(k + 1.0);
    }
    v = acc.value();
  } else {
    SignedLog f = log_phi2_n({p.mu - p.m, p.m}, p.mu + 1.0, {-x / p.theta, -x / p.lambda}, cfg);
    double l = p.mu * std::log(x) - (p.mu - p.m) * std::log(p.theta) - p.m * std::log(p.lambda) -
               log_gamma(p.mu + 1.0) + f.log_abs;
    v = f.sign * std::exp(l);
  }
  return std::min(1.0, std::max(0.0, v));
}

// Bessel-I density of the eta-mu power (format i), scaled to mean_power.
inline double eta_mu_pdf_direct(const EtaMuParams& p, double x) {
  if (!(x >= 0.0)) throw InvalidParameter("eta_mu_pdf_direct: x must be >= 0");
  const double mb = p.mu_bar, nu = mb - 0.5;
  const double g = x / p.mean_power;
  if (g == 0.0) {
    if (mb > 0.5) return 0.0;
    if (mb < 0.5) return std::numeric_limits<double>::infinity();
  }
  const double z = 2.0 * mb * std::fabs(p.H) * g;
  // log of I_nu(z) / z^nu
  double log_iz;
  if (z == 0.0) {
    log_iz = -nu * std::log(2.0) - log_gamma(nu + 1.0);
  } else if (nu >= 0.0 && z < 600.0) {
    log_iz = std::log(std::cyl_bessel_i(nu, z)) - nu * std::log(z);
  } else {
    SignedLog s = detail::pfq_series<0, 1>({}, {nu + 1.0}, 0.25 * z * z, SeriesConfig{}, "eta_mu_pdf_direct");
    log_iz = s.log_abs - nu * std::log(2.0) - log_gamma(nu + 1.0);
  }
  double lg = g == 0.0 ? 0.0 : std::log(g);
  double l = std::log(2.0 * std::sqrt(M_PI)) + (mb + 0.5) * std::log(mb) + mb * std::log(p.h) + (mb - 0.5) * lg +
             nu * std::log(2.0 * mb * g) - log_gamma(mb) - 2.0 * mb * p.h * g + log_iz;
  if (g == 0.0) l = std::log(2.0 * std::sqrt(M_PI)) + (mb + 0.5) * std::log(mb) + mb * std::log(p.h) +
                    nu * std::log(2.0 * mb) - log_gamma(mb) + log_iz;
  return std::exp(l) / p.mean_power;
}

// Draw given the shadow scale s: K ~ Poisson(mu kappa s), X ~ Gamma(mu + K, theta).
// The conditional mean is mu theta (1 + kappa s).
template <class URBG>
double sample_power_given_shadow(const FadingProfile& p, double s, URBG& rng) {
  double k = 0.0;
  const double lam = p.mu * p.kappa * s;
  if (lam > 0.0) k = static_cast<double>(std::poisson_distribution<long long>(lam)(rng));
  return std::gamma_distribution<double>(p.mu + k, p.theta)(rng);
}

// One draw: S ~ Gamma(m, 1/m), then the conditional draw.
template <class URBG>
double sample_power(const FadingProfile& p, URBG& rng) {
  double s = 1.0;
  if (!p.kappa_mu_limit()) s = std::gamma_distribution<double>(p.m, 1.0 / p.m)(rng);
  return sample_power_given_shadow(p, s, rng);
}

}  // namespace kmsf
