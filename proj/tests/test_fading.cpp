#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "kmsf/fading.hpp"
#include "kmsf/montecarlo.hpp"
#include "kmsf/quadrature.hpp"

using namespace kmsf;

class FadingTest : public ::testing::Test {
 protected:
  FadingProfile table_one = make_profile(1.5, 1.2, 10.0, 1.0);

  static double pdf_integral(const FadingProfile& p, double lo, double hi) {
    return integrate([&](double x) { return pdf(p, x); }, lo, hi, 0.0, 1e-13, 4000).value;
  }
  static double pdf_total(const FadingProfile& p, double moment = 0.0) {
    // x = w^{1/mu} absorbs the x^{mu-1} endpoint behaviour on [0, 1]
    QuadResult head = integrate(
        [&](double w) {
          double x = std::pow(w, 1.0 / p.mu);
          return pdf(p, x) * std::pow(x, 1.0 - p.mu + moment) / p.mu;
        },
        0.0, 1.0, 0.0, 1e-13, 4000);
    QuadResult tail = integrate_to_infinity([&](double x) { return pdf(p, x) * std::pow(x, moment); }, 1.0, 0.0, 1e-13);
    return head.value + tail.value;
  }
};

// ============================================================================
// Parameterization
// ============================================================================

TEST_F(FadingTest, DerivedScales) {
  FadingProfile a = make_profile(1.0, 1.0, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(a.theta, 0.5);
  EXPECT_DOUBLE_EQ(a.lambda, 1.0);
  FadingProfile b = make_profile(0.0, 2.5, 3.0, 4.0);
  EXPECT_DOUBLE_EQ(b.theta, 4.0 / 2.5);
  EXPECT_DOUBLE_EQ(b.lambda, b.theta);
  EXPECT_NEAR(table_one.theta, 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(table_one.lambda, 11.8 / 30.0, 1e-15);
}

TEST_F(FadingTest, ThetaNeverExceedsLambda) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.01, 20.0);
  for (int i = 0; i < 200; ++i) {
    FadingProfile p = make_profile(i % 5 == 0 ? 0.0 : u(rng), u(rng), u(rng), u(rng));
    EXPECT_LE(p.theta, p.lambda);
    EXPECT_EQ(p.theta == p.lambda, p.kappa == 0.0);
  }
}

TEST_F(FadingTest, InvalidParameters) {
  EXPECT_THROW(make_profile(-0.1, 1.0, 1.0, 1.0), InvalidParameter);
  EXPECT_THROW(make_profile(1.0, 0.0, 1.0, 1.0), InvalidParameter);
  EXPECT_THROW(make_profile(1.0, 1.0, 0.0, 1.0), InvalidParameter);
  EXPECT_THROW(make_profile(1.0, 1.0, INFINITY, 1.0), InvalidParameter);
  EXPECT_THROW(make_profile(1.0, 1.0, 1.0, -1.0), InvalidParameter);
  EXPECT_TRUE(make_profile(1.0, 1.0, 2e4, 1.0).large_m);
  EXPECT_FALSE(table_one.large_m);
}

TEST_F(FadingTest, EtaMuMapping) {
  FadingProfile one = from_eta_mu(make_eta_mu(1.0, 0.8, 1.0));
  EXPECT_EQ(one.kappa, 0.0);
  FadingProfile f = from_eta_mu(make_eta_mu(0.5, 1.0, 1.0));
  EXPECT_DOUBLE_EQ(f.kappa, 0.5);
  EXPECT_DOUBLE_EQ(f.mu, 2.0);
  EXPECT_DOUBLE_EQ(f.m, 1.0);
  EXPECT_EQ(f.origin, Origin::from_eta_mu);
  FadingProfile folded = from_eta_mu(make_eta_mu(2.0, 1.0, 1.0));
  EXPECT_TRUE(folded.eta_folded);
  EXPECT_DOUBLE_EQ(folded.kappa, 0.5);
  EtaMuParams e = make_eta_mu(0.3, 0.7, 2.0);
  EXPECT_GT(e.h, std::fabs(e.H));
  EXPECT_THROW(make_eta_mu(0.0, 1.0, 1.0), InvalidParameter);
}

TEST_F(FadingTest, HoytMapping) {
  FadingProfile r = from_hoyt(1.0, 2.0);
  EXPECT_EQ(r.kappa, 0.0);
  EXPECT_DOUBLE_EQ(r.mu, 1.0);
  EXPECT_DOUBLE_EQ(r.m, 0.5);
  for (double x : {0.1, 1.0, 4.0}) EXPECT_NEAR(pdf(r, x), std::exp(-x / 2.0) / 2.0, 1e-14);
  FadingProfile h = from_hoyt(0.5, 1.0);
  EXPECT_DOUBLE_EQ(h.kappa, 1.5);
  EXPECT_DOUBLE_EQ(h.mu, 1.0);
  EXPECT_DOUBLE_EQ(h.m, 0.5);
  FadingProfile viaeta = from_eta_mu(make_eta_mu(0.25, 0.5, 1.0));
  EXPECT_EQ(h.kappa, viaeta.kappa);
  EXPECT_EQ(h.theta, viaeta.theta);
  EXPECT_EQ(h.origin, Origin::from_hoyt);
  EXPECT_THROW(from_hoyt(1.5, 1.0), InvalidParameter);
}

// ============================================================================
// Density
// ============================================================================

TEST_F(FadingTest, PdfEndpointAndGammaCase) {
  EXPECT_EQ(pdf(make_profile(1.0, 2.0, 3.0, 1.0), 0.0), 0.0);
  EXPECT_NEAR(pdf(make_profile(0.0, 2.0, 5.0, 2.0), 1.0), std::exp(-1.0), 1e-15);
}

TEST_F(FadingTest, PdfReferenceValue) {
  // mpmath, 40 digits
  EXPECT_NEAR(pdf(table_one, 0.7), 0.61340875876400573683, 1e-13);
}

TEST_F(FadingTest, PdfNormalizationAndMean) {
  for (const auto& p : {table_one, make_profile(3.0, 0.6, 0.8, 2.0), make_profile(0.5, 4.0, 50.0, 0.3),
                        make_rician_shadowed(2.0, 1.5, 1.0)}) {
    EXPECT_NEAR(pdf_total(p), 1.0, 1e-8);
    EXPECT_NEAR(pdf_total(p, 1.0) / p.mean_power, 1.0, 1e-8);
  }
}

TEST_F(FadingTest, LargeMApproachesKappaMu) {
  FadingProfile big = make_profile(2.0, 1.5, 1e4, 1.0);
  FadingProfile lim = make_kappa_mu_profile(2.0, 1.5, 1.0);
  EXPECT_TRUE(lim.kappa_mu_limit());
  for (double x : {0.05, 0.3, 1.0, 2.0, 4.0}) EXPECT_NEAR(pdf(big, x) / pdf(lim, x), 1.0, 1e-3) << x;
  EXPECT_NEAR(pdf_total(lim), 1.0, 1e-8);
}

// ============================================================================
// Distribution function
// ============================================================================

TEST_F(FadingTest, CdfReferenceValues) {
  EXPECT_EQ(cdf(table_one, 0.0), 0.0);
  EXPECT_NEAR(cdf(table_one, 0.7), 0.42242917096426966624, 1e-12);
  EXPECT_NEAR(cdf(table_one, 2.5), 0.95279017602693802933, 1e-12);
}

TEST_F(FadingTest, CdfMatchesPdfQuadrature) {
  for (const auto& p : {table_one, make_profile(3.0, 0.6, 0.8, 2.0), make_profile(0.5, 4.0, 50.0, 0.3)}) {
    for (double x : {0.2, 0.9, 2.5}) {
      double q = pdf_integral(p, 0.0, x);
      EXPECT_NEAR(cdf(p, x), q, 1e-7) << x;
    }
  }
}

TEST_F(FadingTest, CdfTailAndMonotone) {
  EXPECT_NEAR(cdf(table_one, 50.0), 1.0, 1e-6);
  double prev = 0.0;
  for (double x = 0.05; x < 6.0; x += 0.05) {
    double v = cdf(table_one, x);
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST_F(FadingTest, CdfDerivativeIsPdf) {
  const double h = 1e-5;
  for (const auto& p : {table_one, make_profile(1.0, 2.0, 3.0, 1.0)})
    for (double x : {0.3, 1.0, 2.0}) {
      double d = (cdf(p, x + h) - cdf(p, x - h)) / (2.0 * h);
      EXPECT_NEAR(d / pdf(p, x), 1.0, 1e-5) << x;
    }
}

TEST_F(FadingTest, KappaMuCdf) {
  FadingProfile lim = make_kappa_mu_profile(2.0, 1.5, 1.0);
  EXPECT_NEAR(cdf(lim, 1.3), pdf_integral(lim, 0.0, 1.3), 1e-9);
}

// ============================================================================
// Eta-mu density
// ============================================================================

TEST_F(FadingTest, EtaMuDirectMatchesMapped) {
  for (const auto& e : {make_eta_mu(0.5, 1.0, 1.0), make_eta_mu(0.2, 0.7, 2.0), make_eta_mu(3.0, 1.3, 0.5),
                        make_eta_mu(0.25, 0.5, 1.0)}) {
    FadingProfile f = from_eta_mu(e);
    for (double x : {0.05, 0.4, 1.0, 2.5}) EXPECT_NEAR(eta_mu_pdf_direct(e, x) / pdf(f, x), 1.0, 1e-9) << x;
  }
}

TEST_F(FadingTest, EtaMuSymmetryPoint) {
  EtaMuParams e = make_eta_mu(1.0, 0.9, 1.5);
  FadingProfile g = make_profile(0.0, 1.8, 0.9, 1.5);
  for (double x : {0.1, 1.0, 3.0}) EXPECT_NEAR(eta_mu_pdf_direct(e, x), pdf(g, x), 1e-12);
}

TEST_F(FadingTest, EtaMuNormalization) {
  EtaMuParams e = make_eta_mu(0.2, 1.5, 1.0);
  QuadResult q = integrate_to_infinity([&](double x) { return eta_mu_pdf_direct(e, x); }, 0.0, 0.0, 1e-12);
  EXPECT_NEAR(q.value, 1.0, 1e-8);
}

// ============================================================================
// Sampling
// ============================================================================

TEST_F(FadingTest, SampleMean) {
  Philox4x32 rng(11, 0);
  double s = 0.0;
  const int n = 1'000'000;
  for (int i = 0; i < n; ++i) s += sample_power(table_one, rng);
  EXPECT_NEAR(s / n, 1.0, 0.01);
}

TEST_F(FadingTest, ConditionalMeanGivenShadow) {
  Philox4x32 rng(13, 0);
  const int n = 400'000;
  for (double S : {0.3, 1.0, 2.7}) {
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      double v = sample_power_given_shadow(table_one, S, rng);
      s += v;
      s2 += v * v;
    }
    const double mean = s / n, se = std::sqrt((s2 / n - mean * mean) / n);
    EXPECT_NEAR(mean, table_one.mu * table_one.theta * (1.0 + table_one.kappa * S), 4.0 * se) << S;
  }
}

TEST_F(FadingTest, GammaCaseMoments) {
  FadingProfile g = make_profile(0.0, 2.5, 3.0, 2.0);
  Philox4x32 rng(12, 0);
  double s = 0.0, s2 = 0.0;
  const int n = 400'000;
  for (int i = 0; i < n; ++i) {
    double v = sample_power(g, rng);
    s += v;
    s2 += v * v;
  }
  const double mean = s / n, var = s2 / n - mean * mean;
  EXPECT_NEAR(mean, 2.0, 0.01);
  EXPECT_NEAR(var, 2.5 * g.theta * g.theta, 0.03);
}

TEST_F(FadingTest, RicianShadowedSampler) {
  FadingProfile r = make_rician_shadowed(2.0, 1.5, 1.0);
  EXPECT_EQ(r.origin, Origin::from_rician_shadowed);
  EXPECT_LT(ks_validate_sampler(r, 100'000, 1), 1.36 / std::sqrt(1e5));
}
