#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include <boost/math/special_functions/beta.hpp>

#include "kmsf/montecarlo.hpp"
#include "kmsf/sir_analysis.hpp"

using namespace kmsf;

class SirAnalysisTest : public ::testing::Test {
 protected:
  static constexpr double kT3dB = 1.9952623149688795;  // 10^0.3

  static CellScenario scenario(int tiers, double alpha, const FadingProfile& soi, const FadingProfile& intf) {
    CellScenario sc;
    sc.layout = build_hex_layout(1000.0, tiers);
    sc.alpha = alpha;
    sc.soi = soi;
    sc.interferers.assign(sc.layout.interferer_count(), intf);
    return sc;
  }
  static CellScenario table_one(double alpha) {
    return scenario(2, alpha, make_profile(1.5, 1.2, 10.0, 1.0), make_profile(1.0, 1.0, 10.0, 1.0));
  }
  static SirProblem single(const FadingProfile& soi, const FadingProfile& intf, double T) { return {soi, {intf}, T}; }
  // Mixture tail below 1e-13; small SoI m with large kappa needs more than the default 200 terms.
  static double series_full(const SirProblem& pr) {
    SeriesConfig cfg;
    cfg.max_index_per_dim = 2000;
    return outage_series(pr, mixture_terms(pr.soi, 1e-13, cfg), cfg).value;
  }
};

// ============================================================================
// Closed forms
// ============================================================================

TEST_F(SirAnalysisTest, RayleighRayleighClosedForm) {
  for (double T : {0.1, 1.0, 3.7, 25.0})
    for (double g1 : {0.2, 1.0, 4.0}) {
      SirProblem pr = single(make_profile(0.0, 1.0, 2.0, 1.5), make_profile(0.0, 1.0, 0.7, g1), T);
      const double exact = T * g1 / (1.5 + T * g1);
      EXPECT_NEAR(outage_series(pr, 0).value, exact, 1e-10);
      EXPECT_NEAR(outage_ed(pr).value, exact, 1e-10);
    }
}

TEST_F(SirAnalysisTest, NakagamiBetaClosedForm) {
  // kappa = 0 everywhere with a common interferer scale: SIR outage is a regularized incomplete beta
  for (double mu : {0.6, 1.0, 2.4})
    for (double mui : {0.5, 1.3}) {
      FadingProfile soi = make_profile(0.0, mu, 3.0, 2.0);
      FadingProfile intf = make_profile(0.0, mui, 5.0, 0.4);
      SirProblem pr{soi, {intf, intf, intf}, 1.7};
      const double z = pr.T * intf.theta / (soi.theta + pr.T * intf.theta);
      const double exact = boost::math::ibeta(mu, 3.0 * mui, z);
      EXPECT_NEAR(outage_series(pr, 0).value, exact, 1e-10);
      EXPECT_NEAR(outage_ed(pr).value, exact, 1e-10);
      EXPECT_NEAR(outage_cf_inversion(pr).value, exact, 1e-9);
    }
}

TEST_F(SirAnalysisTest, SingleInterfererQuadratureOracle) {
  // int f_h(y) F_g(T y) dy with scipy at tolerance 1e-12
  SirProblem pr = single(make_profile(1.5, 1.2, 10.0, 1.0), make_profile(1.0, 1.0, 10.0, 0.3), 2.0);
  EXPECT_NEAR(series_full(pr), 0.3256874105657986, 1e-10);
  EXPECT_NEAR(outage_ed(pr).value, 0.3256874105657986, 1e-10);
}

TEST_F(SirAnalysisTest, InterferenceCdf) {
  std::vector<FadingProfile> one = {make_profile(1.0, 1.3, 4.0, 0.7)};
  EXPECT_EQ(interference_cdf(one, 0.0), 0.0);
  for (double y : {0.1, 0.6, 2.0}) EXPECT_NEAR(interference_cdf(one, y), cdf(one[0], y), 1e-12);
}

TEST_F(SirAnalysisTest, InterferenceCdfVersusSimulation) {
  std::vector<FadingProfile> in = {make_profile(1.0, 1.0, 10.0, 0.5), make_profile(2.0, 0.7, 2.0, 0.3),
                                   make_profile(0.0, 1.5, 1.0, 0.2)};
  Philox4x32 rng(5, 0);
  std::vector<double> s(1'000'000);
  for (auto& v : s) {
    v = 0.0;
    for (const auto& f : in) v += sample_power(f, rng);
  }
  std::sort(s.begin(), s.end());
  double d = 0.0;
  for (int k = 1; k < 200; ++k) {
    double y = s[s.size() * k / 200];
    double emp = static_cast<double>(std::upper_bound(s.begin(), s.end(), y) - s.begin()) / s.size();
    d = std::max(d, std::fabs(emp - interference_cdf(in, y)));
  }
  EXPECT_LT(d, 0.002);
}

// ============================================================================
// Reference configuration
// ============================================================================

TEST_F(SirAnalysisTest, TableOneRowsAgreeAcrossForms) {
  struct Row {
    double alpha, r, value;
  };
  // Values of this library at azimuth 0; the ED form and CF inversion are independent routes.
  for (Row row : {Row{3.6, 600.0, 0.132661991634}, Row{3.0, 800.0, 0.710923255895}, Row{4.0, 500.0, 0.027557714998}}) {
    SirProblem pr = problem_at(table_one(row.alpha), row.r, kT3dB);
    double s = outage_series(pr, 50).value;
    EXPECT_NEAR(s, outage_ed(pr).value, 1e-8);
    EXPECT_NEAR(s, outage_cf_inversion(pr).value, 1e-9);
    EXPECT_NEAR(s, row.value, 1e-10);
  }
}

TEST_F(SirAnalysisTest, ThresholdLimits) {
  SirProblem pr = problem_at(table_one(3.6), 600.0, 1e-12);
  EXPECT_LT(outage_series(pr, 50).value, 1e-9);
  pr.T = 1e12;
  EXPECT_NEAR(outage_ed(pr).value, 1.0, 1e-9);
}

TEST_F(SirAnalysisTest, MonotoneInThreshold) {
  CellScenario sc = table_one(3.6);
  double prev = 0.0;
  for (double tdb = -10.0; tdb <= 20.0; tdb += 2.5) {
    double v = outage_series(problem_at(sc, 600.0, std::pow(10.0, tdb / 10.0)), 50).value;
    EXPECT_GE(v, prev - 1e-12);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    prev = v;
  }
}

// ============================================================================
// Cross-form agreement
// ============================================================================

TEST_F(SirAnalysisTest, RandomizedSeriesVersusEd) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> uk(0.0, 4.0), umu(0.5, 3.0), um(0.5, 20.0), ur(150.0, 1000.0),
      ua(2.5, 4.5), ut(-5.0, 10.0), umean(0.5, 2.0);
  const int sizes[] = {1, 2, 6, 18};
  int checked = 0;
  for (int t = 0; t < 56; ++t) {
    const int N = sizes[t % 4];
    FadingProfile soi = make_profile(uk(rng), umu(rng), um(rng), 1.0);
    SirProblem pr;
    if (N <= 2) {
      pr.soi = scaled(soi, 3.0);
      for (int j = 0; j < N; ++j) pr.interferers.push_back(make_profile(uk(rng), umu(rng), um(rng), umean(rng)));
      pr.T = std::pow(10.0, ut(rng) / 10.0);
    } else {
      CellScenario sc = scenario(N == 6 ? 1 : 2, ua(rng), soi, make_profile(uk(rng), umu(rng), um(rng), 1.0));
      for (std::size_t j = 0; j < sc.interferers.size(); ++j)
        if (sc.layout.ring[j + 1] == 2) sc.interferers[j] = make_profile(uk(rng), umu(rng), um(rng), 1.0);
      sc.azimuth = 0.1 * t;
      pr = problem_at(sc, ur(rng), std::pow(10.0, ut(rng) / 10.0));
    }
    double s = series_full(pr);
    double e;
    try {
      e = outage_ed(pr).value;
    } catch (const NonConvergence&) {
      continue;  // the E_D outer sum exceeds its budget (user very close to its site)
    }
    EXPECT_NEAR(s, e, 1e-8) << "case " << t << " N=" << N;
    ++checked;
  }
  EXPECT_GE(checked, 50);
}

// ============================================================================
// Truncation
// ============================================================================

TEST_F(SirAnalysisTest, TruncationKappaZeroExact) {
  SirProblem pr{make_profile(0.0, 1.4, 3.0, 1.0), {make_profile(1.0, 1.0, 2.0, 0.3)}, 1.0};
  EXPECT_EQ(truncation_bound(pr, 0), 0.0);
  EXPECT_NEAR(outage_series(pr, 0).value, outage_series(pr, 30).value, 1e-15);
}

TEST_F(SirAnalysisTest, TruncationTableOneAtFifty) {
  SirProblem pr = problem_at(table_one(3.6), 600.0, kT3dB);
  double b = truncation_bound(pr, 50);
  EXPECT_LT(b, 1e-6);
  EXPECT_LE(std::fabs(outage_series(pr, 50).value - outage_series(pr, 80).value), b);
}

TEST_F(SirAnalysisTest, MixtureTailDominatesTruncationError) {
  for (int i = 0; i < 20; ++i) {
    const double kappa = 4.0 * i / 19.0, mu = 0.5 + 2.5 * ((i * 7) % 20) / 19.0;
    CellScenario sc = scenario(1, 3.6, make_profile(kappa, mu, 3.0, 1.0), make_profile(1.0, 1.0, 10.0, 1.0));
    SirProblem pr = problem_at(sc, 600.0, kT3dB);
    TruncationBound b = truncation_bound_detail(pr, 10);
    double err = std::fabs(outage_series(pr, 10).value - outage_series(pr, 200).value);
    EXPECT_LE(err, b.mixture_tail * (1.0 + 1e-9) + 1e-14) << "kappa=" << kappa << " mu=" << mu;
  }
}

TEST_F(SirAnalysisTest, RequiredTermsMonotone) {
  SeriesConfig cfg;
  auto required = [&](double kappa, double mu) {
    CellScenario sc = scenario(2, 3.6, make_profile(kappa, mu, 10.0, 1.0), make_profile(1.0, 1.0, 10.0, 1.0));
    return auto_terms(problem_at(sc, 600.0, kT3dB), 1e-6, cfg);
  };
  for (double mu : {1.0, 2.0, 3.0}) {
    EXPECT_LE(required(1.0, mu), required(2.0, mu));
    EXPECT_LE(required(2.0, mu), required(4.0, mu));
  }
  for (double kappa : {1.0, 2.0, 4.0}) {
    EXPECT_LE(required(kappa, 1.0), required(kappa, 2.0));
    EXPECT_LE(required(kappa, 2.0), required(kappa, 3.0));
  }
}

TEST_F(SirAnalysisTest, AutoTermsReported) {
  SirProblem pr = problem_at(table_one(3.6), 600.0, kT3dB);
  OutageResult r = outage_series(pr, std::nullopt);
  SeriesConfig cfg;
  EXPECT_EQ(r.terms_used, auto_terms(pr, 1e-6, cfg));
  EXPECT_NEAR(r.value, outage_series(pr, 50).value, 1e-6);
  EXPECT_EQ(r.method, OutageMethod::fd_series);
  // the reported bound covers the actual truncation error
  EXPECT_LE(std::fabs(r.value - outage_series(pr, 150).value), r.error_bound);
  EXPECT_LT(r.error_bound, 1e-6);
}

TEST_F(SirAnalysisTest, InfiniteInterfererShadowingRejected) {
  SirProblem pr{make_profile(1.0, 1.0, 2.0, 1.0), {make_kappa_mu_profile(1.0, 1.0, 0.3)}, 1.0};
  EXPECT_THROW(outage_series(pr, 10), InvalidParameter);
}

TEST_F(SirAnalysisTest, NearSiteUserUsesComplementForm) {
  // User close to its site: the SoI scale dwarfs T s_k and the coverage series would need
  // millions of shells, so the complement form carries the brackets.
  SirProblem pr = problem_at(table_one(4.0), 30.0, 1e3);
  OutageResult r = outage_series(pr, 50);
  EXPECT_EQ(r.method, OutageMethod::fd_series);
  EXPECT_NEAR(r.value, outage_cf_inversion(pr).value, 1e-9);
}

TEST_F(SirAnalysisTest, AutoFallsBackToInversion) {
  SirProblem pr = problem_at(table_one(3.6), 600.0, kT3dB);
  SeriesConfig starved;
  starved.max_total_terms = 3;
  EXPECT_THROW(outage_series(pr, 50, starved), NonConvergence);
  OutageResult r = outage_auto(pr, starved);
  EXPECT_EQ(r.method, OutageMethod::cf_inversion);
  EXPECT_NEAR(r.value, outage_series(pr, 50).value, 1e-9);
}

// ============================================================================
// Limits and special cases
// ============================================================================

TEST_F(SirAnalysisTest, KappaMuSoiLimit) {
  CellScenario sc = scenario(1, 3.6, make_profile(2.0, 1.5, 1e6, 1.0), make_profile(1.0, 1.0, 4.0, 1.0));
  SirProblem big = problem_at(sc, 600.0, kT3dB);
  OutageResult lim = outage_soi_kappa_mu(big);
  EXPECT_EQ(lim.method, OutageMethod::kappa_mu_soi);
  EXPECT_NEAR(lim.value, series_full(big), 1e-4);
  // kappa = 0 reduces to the Nakagami SoI
  sc.soi = make_profile(0.0, 1.5, 3.0, 1.0);
  SirProblem nak = problem_at(sc, 600.0, kT3dB);
  EXPECT_NEAR(outage_soi_kappa_mu(nak).value, outage_series(nak, 0).value, 1e-12);
}

TEST_F(SirAnalysisTest, KappaZeroInsensitiveToM) {
  double lo = 1.0, hi = 0.0;
  for (double m = 1.0; m <= 50.0; m += 7.0) {
    CellScenario sc = scenario(2, 3.6, make_profile(0.0, 1.2, m, 1.0), make_profile(1.0, 1.0, 10.0, 1.0));
    double v = outage_series(problem_at(sc, 600.0, kT3dB), 50).value;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  EXPECT_LT(hi - lo, 1e-9);
}

TEST_F(SirAnalysisTest, OutageDecreasesInMAndMu) {
  double prev = 1.0;
  for (double m : {1.0, 2.0, 5.0, 10.0, 20.0}) {
    CellScenario sc = scenario(2, 3.6, make_profile(2.0, 1.0, m, 1.0), make_profile(1.0, 1.0, 10.0, 1.0));
    double v = outage_auto(problem_at(sc, 600.0, kT3dB)).value;
    EXPECT_LT(v, prev);
    prev = v;
  }
  prev = 1.0;
  for (double mu : {0.5, 1.0, 2.0, 3.0}) {
    CellScenario sc = scenario(2, 3.6, make_profile(2.0, mu, 5.0, 1.0), make_profile(1.0, 1.0, 10.0, 1.0));
    double v = outage_auto(problem_at(sc, 600.0, kT3dB)).value;
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST_F(SirAnalysisTest, EtaMuRoutesAgree) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> ue(0.05, 3.0), umb(0.3, 2.0), umean(0.1, 1.0), ut(0.2, 5.0);
  for (int t = 0; t < 20; ++t) {
    EtaMuParams soi = make_eta_mu(ue(rng), umb(rng), 1.0);
    std::vector<EtaMuParams> in;
    for (int j = 0; j < 1 + t % 3; ++j) in.push_back(make_eta_mu(ue(rng), umb(rng), umean(rng)));
    OutageResult r = outage_eta_mu(soi, in, ut(rng));
    EXPECT_EQ(r.method, OutageMethod::eta_mu);
    EXPECT_NEAR(r.value, r.cross_check, 1e-8) << "case " << t;
  }
}

TEST_F(SirAnalysisTest, EtaMuUnitEtaIsNakagami) {
  EtaMuParams soi = make_eta_mu(1.0, 0.8, 1.0);
  std::vector<EtaMuParams> in = {make_eta_mu(1.0, 0.6, 0.3), make_eta_mu(1.0, 1.1, 0.2)};
  SirProblem pr{make_profile(0.0, 1.6, 0.8, 1.0), {make_profile(0.0, 1.2, 0.6, 0.3), make_profile(0.0, 2.2, 1.1, 0.2)}, 1.4};
  EXPECT_NEAR(outage_eta_mu(soi, in, 1.4).value, outage_series(pr, 0).value, 1e-10);
}

TEST_F(SirAnalysisTest, HoytMatchesEtaMu) {
  std::vector<EtaMuParams> in = {make_eta_mu(0.4, 0.8, 0.2), make_eta_mu(1.0, 1.0, 0.3), make_eta_mu(2.5, 0.6, 0.1)};
  // q = 0.2 gives a mixture ratio of 0.96, about 700 outer terms
  SeriesConfig wide;
  wide.max_index_per_dim = 2000;
  for (double q : {0.2, 0.5, 0.9, 1.0})
    for (double T : {0.5, 2.0}) {
      OutageResult h = outage_hoyt(q, 1.0, in, T);
      EXPECT_EQ(h.method, OutageMethod::hoyt);
      EXPECT_NEAR(h.value, outage_eta_mu(make_eta_mu(q * q, 0.5, 1.0), in, T, wide).value, 1e-8) << q;
    }
  EXPECT_THROW(outage_eta_mu(make_eta_mu(0.04, 0.5, 1.0), in, 2.0), NonConvergence);
  EXPECT_LT(outage_hoyt(0.5, 1.0, in, 1e-12).value, 1e-9);
}

// ============================================================================
// Rate
// ============================================================================

TEST_F(SirAnalysisTest, RateSingleInterfererQuadrature) {
  // E ln(1 + g/h) by scipy double quadrature
  SirProblem pr = single(make_profile(1.5, 2.0, 3.0, 1.0), make_profile(1.0, 1.0, 10.0, 0.3), 1.0);
  EXPECT_NEAR(rate_shadowed(pr), 1.7935752776944591, 1e-8);
}

TEST_F(SirAnalysisTest, RateVersusIntegralOracle) {
  CellScenario sc = scenario(2, 3.6, make_profile(1.5, 2.0, 10.0, 1.0), make_profile(1.0, 1.0, 10.0, 1.0));
  for (double r : {300.0, 650.0, 950.0}) {
    SirProblem pr = problem_at(sc, r, 1.0);
    EXPECT_NEAR(rate_shadowed(pr), rate_integral_oracle(pr), 1e-5) << r;
  }
}

TEST_F(SirAnalysisTest, RateVersusEnumeratedForm) {
  SirProblem pr{make_profile(1.0, 2.0, 3.0, 1.0), {make_profile(1.0, 1.0, 2.0, 0.3), make_profile(0.5, 2.0, 4.0, 0.2)}, 1.0};
  // The enumerated form sums many continued F_D values, so it runs at tight tolerances.
  SeriesConfig tight;
  tight.abs_tol = 1e-15;
  tight.rel_tol = 1e-14;
  EXPECT_NEAR(rate_shadowed(pr, 20), rate_shadowed_enumerated(pr, 20, tight), 1e-8);
}

TEST_F(SirAnalysisTest, RateLimits) {
  CellScenario sc = scenario(1, 3.6, make_profile(1.5, 2.0, 10.0, 1.0), make_profile(1.0, 1.0, 10.0, 1e6));
  EXPECT_LT(rate_shadowed(problem_at(sc, 900.0, 1.0)), 1e-5);
  // Closer in, unit-mu interferers keep E[1/h] log-divergent and the rate stays near 1.17e-5.
  SirProblem mid = problem_at(sc, 600.0, 1.0);
  EXPECT_NEAR(rate_shadowed(mid), rate_integral_oracle(mid), 1e-12);
  EXPECT_NEAR(rate_shadowed(mid), 1.16749874e-05, 1e-13);
  sc.soi = make_profile(1.5, 1.2, 10.0, 1.0);
  EXPECT_THROW(rate_shadowed(problem_at(sc, 600.0, 1.0)), InvalidParameter);
}

TEST_F(SirAnalysisTest, RateKappaMuLimit) {
  CellScenario sc = scenario(1, 3.6, make_profile(2.0, 2.0, 1e6, 1.0), make_profile(1.0, 1.0, 10.0, 1.0));
  SirProblem pr = problem_at(sc, 600.0, 1.0);
  EXPECT_NEAR(rate_kappa_mu(pr), rate_shadowed(pr), 1e-4);
  sc.soi = make_profile(0.0, 2.0, 3.0, 1.0);
  pr = problem_at(sc, 600.0, 1.0);
  EXPECT_NEAR(rate_kappa_mu(pr), rate_shadowed(pr), 1e-10);
}

// ============================================================================
// Typical user
// ============================================================================

TEST_F(SirAnalysisTest, RadialAverageOfConstant) {
  auto grid = uniform_radial_grid(1000.0, 10);
  EXPECT_NEAR(radial_average(grid, 1000.0, [](double) { return 0.37; }), 0.37, 1e-12);
  EXPECT_THROW(radial_average({100.0, 50.0, 1000.0}, 1000.0, [](double) { return 1.0; }), InvalidParameter);
  EXPECT_THROW(uniform_radial_grid(1000.0, 1), InvalidParameter);
}

TEST_F(SirAnalysisTest, TypicalOutageIncreasesWithT) {
  CellScenario sc = scenario(1, 3.6, make_profile(1.5, 1.2, 10.0, 1.0), make_profile(1.0, 1.0, 10.0, 1.0));
  auto grid = uniform_radial_grid(1000.0, 8);
  double a = typical_user(Metric::outage, sc, 1.0, grid);
  double b = typical_user(Metric::outage, sc, 2.0, grid);
  EXPECT_GT(b, a);
  EXPECT_GT(a, 0.0);
}
