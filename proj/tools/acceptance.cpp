#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "kmsf/fading.hpp"
#include "kmsf/montecarlo.hpp"
#include "kmsf/oracles.hpp"
#include "kmsf/quadrature.hpp"
#include "kmsf/reuse.hpp"
#include "kmsf/sir_analysis.hpp"

using namespace kmsf;

namespace {

constexpr double kT3dB = 1.9952623149688795;

unsigned threads() { return std::max(1u, std::thread::hardware_concurrency()); }

CellScenario scenario(int tiers, double alpha, const FadingProfile& soi, const FadingProfile& intf, double az = 0.0) {
  CellScenario sc;
  sc.layout = build_hex_layout(1000.0, tiers);
  sc.alpha = alpha;
  sc.azimuth = az;
  sc.soi = soi;
  sc.interferers.assign(sc.layout.interferer_count(), intf);
  return sc;
}

CellScenario table_one(double alpha, double az = 0.0) {
  return scenario(2, alpha, make_profile(1.5, 1.2, 10.0, 1.0), make_profile(1.0, 1.0, 10.0, 1.0), az);
}

double rel(double v, double ref) { return std::fabs(v - ref) / std::max(1e-300, std::fabs(ref)); }

struct Line {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "ok " : "FAILED ") + what;
  }
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Reference outage rows at the closest azimuth on the grid, with a Monte Carlo interval there.
Line criterion1() {
  struct Row {
    double alpha, r, published;
  };
  const Row rows[] = {{3.6, 600.0, 0.6492}, {3.0, 800.0, 0.1471}, {4.0, 500.0, 0.8783}};
  double best_dev = INFINITY, best_az = 0.0;
  double best_vals[3] = {};
  for (int k = 0; k <= 12; ++k) {
    const double az = k * 5.0 * M_PI / 180.0;
    double dev = 0.0, vals[3];
    for (int i = 0; i < 3; ++i) {
      vals[i] = outage_auto(problem_at(table_one(rows[i].alpha, az), rows[i].r, kT3dB)).value;
      dev = std::max(dev, std::fabs(vals[i] - rows[i].published));
    }
    if (dev < best_dev) {
      best_dev = dev;
      best_az = az;
      std::copy(vals, vals + 3, best_vals);
    }
  }
  Line l;
  l.check(best_dev <= 2e-3, fmt("closest azimuth %.0f deg gives %.6f/%.6f/%.6f vs 0.6492/0.1471/0.8783 (max dev %.4f)",
                                best_az * 180.0 / M_PI, best_vals[0], best_vals[1], best_vals[2], best_dev));
  McConfig mc;
  mc.iterations = 100'000;
  mc.confidence = 0.99;
  mc.threads = threads();
  for (int i = 0; i < 3; ++i) {
    McEstimate e = simulate_outage(problem_at(table_one(rows[i].alpha, best_az), rows[i].r, kT3dB), mc);
    l.check(e.contains(best_vals[i]), fmt("MC row %d [%.6f, %.6f]", i + 1, e.ci_lo, e.ci_hi));
  }
  return l;
}

double series_full(const SirProblem& pr) {
  SeriesConfig cfg;
  cfg.max_index_per_dim = 2000;
  return outage_series(pr, mixture_terms(pr.soi, 1e-13, cfg), cfg).value;
}

Line criterion2() {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> uk(0.0, 4.0), umu(0.5, 3.0), um(0.5, 20.0), ur(150.0, 1000.0),
      ua(2.5, 4.5), ut(-5.0, 10.0), umean(0.5, 2.0);
  const int sizes[] = {1, 2, 6, 18};
  int checked = 0, agree = 0, skipped = 0;
  double worst = 0.0;
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
    double s = series_full(pr), e;
    try {
      e = outage_ed(pr).value;
    } catch (const NonConvergence&) {
      ++skipped;
      continue;
    }
    ++checked;
    worst = std::max(worst, std::fabs(s - e));
    agree += std::fabs(s - e) <= 1e-8;
  }
  Line l;
  l.check(agree == checked && checked >= 50,
          fmt("%d/%d configurations within 1e-8 (max diff %.2e, %d beyond the E_D budget)", agree, checked, worst, skipped));
  return l;
}

double pdf_integral(const FadingProfile& p, double hi) {
  return integrate([&](double x) { return pdf(p, x); }, 0.0, hi, 0.0, 1e-13, 4000).value;
}

Line criterion3() {
  Line l;
  {
    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<double> ua(0.2, 3.0), ub(-1.0, 2.5), ux(-0.85, 0.85);
    double worst = 0.0;
    for (int t = 0; t < 40; ++t) {
      FdArgs f;
      f.a = ua(rng);
      f.c = f.a + ua(rng);
      for (int j = 0; j < 1 + t % 4; ++j) {
        f.b.push_back(ub(rng));
        f.x.push_back(ux(rng));
      }
      worst = std::max(worst, rel(lauricella_fd(f), fd_integral_oracle(f, 1e-12)));
    }
    l.check(worst <= 1e-8, fmt("F_D vs Euler integral, 40 cases, max rel %.2e", worst));
  }
  {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> ua(0.3, 3.0), ub(-1.0, 2.0), uc(0.5, 4.0), u1(-0.4, 0.4), ur(-0.5, 0.5);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      EdArgs e;
      e.a = ua(rng);
      e.c = uc(rng);
      e.c_prime = uc(rng);
      for (int j = 0; j < 2 + t % 3; ++j) {
        e.b.push_back(ub(rng));
        e.x.push_back(j == 0 ? u1(rng) : ur(rng));
      }
      double o = ed_integral_oracle(e, 1, 1e-11);
      worst = std::max(worst, std::fabs(ed_function(e) - o) / std::max(1.0, std::fabs(o)));
    }
    l.check(worst <= 1e-6, fmt("E_D vs Laplace integral, 100 cases, max err %.2e", worst));
  }
  {
    double worst = 0.0;
    for (const auto& p : {make_profile(1.5, 1.2, 10.0, 1.0), make_profile(3.0, 0.6, 0.8, 2.0), make_profile(0.5, 4.0, 50.0, 0.3)})
      for (double x : {0.2, 0.9, 2.5}) worst = std::max(worst, std::fabs(cdf(p, x) - pdf_integral(p, x)));
    l.check(worst <= 1e-7, fmt("cdf vs pdf quadrature max err %.2e", worst));
  }
  {
    SirProblem pr = problem_at(scenario(1, 3.6, make_profile(1.5, 1.2, 10.0, 1.0), make_profile(1.0, 1.0, 10.0, 1.0)),
                               600.0, kT3dB);
    const double analytic = outage_auto(pr).value;
    McConfig mc;
    mc.iterations = 10'000;
    mc.confidence = 0.99;
    mc.threads = threads();
    int hits = 0;
    for (std::uint64_t s = 1; s <= 20; ++s) {
      mc.seed = s;
      hits += simulate_outage(pr, mc).contains(analytic);
    }
    l.check(hits >= 18, fmt("outage inside MC 99%% CI in %d/20 replications", hits));
  }
  {
    CellScenario sc = scenario(2, 3.6, make_profile(1.5, 2.0, 10.0, 1.0), make_profile(1.0, 1.0, 10.0, 1.0));
    double worst = 0.0;
    for (double r : {300.0, 650.0, 950.0}) {
      SirProblem pr = problem_at(sc, r, 1.0);
      worst = std::max(worst, std::fabs(rate_shadowed(pr) - rate_integral_oracle(pr)));
    }
    l.check(worst <= 1e-5, fmt("rate vs coverage integral max err %.2e", worst));
  }
  return l;
}

Line criterion4() {
  const std::int64_t P = 10;
  int closed_ok = 0, tail_ok = 0;
  double worst_ratio = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double kappa = 4.0 * i / 19.0, mu = 0.5 + 2.5 * ((i * 7) % 20) / 19.0;
    SirProblem pr = problem_at(scenario(1, 3.6, make_profile(kappa, mu, 3.0, 1.0), make_profile(1.0, 1.0, 10.0, 1.0)),
                               600.0, kT3dB);
    TruncationBound b = truncation_bound_detail(pr, P);
    const double err = std::fabs(outage_series(pr, P).value - outage_series(pr, 200).value);
    closed_ok += err <= b.value * (1.0 + 1e-9) + 1e-14;
    tail_ok += err <= b.mixture_tail * (1.0 + 1e-9) + 1e-14;
    if (b.value > 0.0) worst_ratio = std::max(worst_ratio, err / b.value);
  }
  SeriesConfig cfg;
  auto required = [&](double kappa, double mu) {
    CellScenario sc = scenario(2, 3.6, make_profile(kappa, mu, 10.0, 1.0), make_profile(1.0, 1.0, 10.0, 1.0));
    return auto_terms(problem_at(sc, 600.0, kT3dB), 1e-6, cfg);
  };
  bool mono = true;
  for (double mu : {1.0, 2.0, 3.0}) mono = mono && required(1.0, mu) <= required(2.0, mu) && required(2.0, mu) <= required(4.0, mu);
  for (double kappa : {1.0, 2.0, 4.0})
    mono = mono && required(kappa, 1.0) <= required(kappa, 2.0) && required(kappa, 2.0) <= required(kappa, 3.0);
  Line l;
  l.check(closed_ok == 20, fmt("closed-form tail bound dominates in %d/20 (worst err/bound %.3g)", closed_ok, worst_ratio));
  l.check(tail_ok == 20, fmt("mixture-tail bound dominates in %d/20", tail_ok));
  l.check(mono, "required P nondecreasing in kappa and mu");
  return l;
}

Line criterion5() {
  Line l;
  {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> ue(0.05, 3.0), umb(0.3, 2.0), umean(0.1, 1.0), ut(0.2, 5.0);
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
      EtaMuParams soi = make_eta_mu(ue(rng), umb(rng), 1.0);
      std::vector<EtaMuParams> in;
      for (int j = 0; j < 1 + t % 3; ++j) in.push_back(make_eta_mu(ue(rng), umb(rng), umean(rng)));
      OutageResult r = outage_eta_mu(soi, in, ut(rng));
      worst = std::max(worst, std::fabs(r.value - r.cross_check));
    }
    l.check(worst <= 1e-8, fmt("eta-mu mapped vs direct max diff %.2e", worst));
  }
  {
    std::vector<EtaMuParams> in = {make_eta_mu(0.4, 0.8, 0.2), make_eta_mu(1.0, 1.0, 0.3), make_eta_mu(2.5, 0.6, 0.1)};
    SeriesConfig wide;
    wide.max_index_per_dim = 2000;
    double worst = 0.0;
    for (double q : {0.2, 0.5, 0.9, 1.0})
      for (double T : {0.5, 2.0})
        worst = std::max(worst, std::fabs(outage_hoyt(q, 1.0, in, T).value -
                                          outage_eta_mu(make_eta_mu(q * q, 0.5, 1.0), in, T, wide).value));
    l.check(worst <= 1e-8, fmt("Hoyt vs eta-mu max diff %.2e", worst));
  }
  {
    CellScenario sc = scenario(1, 3.6, make_profile(2.0, 1.5, 1e6, 1.0), make_profile(1.0, 1.0, 4.0, 1.0));
    SirProblem big = problem_at(sc, 600.0, kT3dB);
    double d_out = std::fabs(outage_soi_kappa_mu(big).value - series_full(big));
    sc.soi = make_profile(2.0, 2.0, 1e6, 1.0);
    SirProblem pr = problem_at(sc, 600.0, 1.0);
    double d_rate = std::fabs(rate_kappa_mu(pr) - rate_shadowed(pr));
    l.check(d_out <= 1e-4 && d_rate <= 1e-4, fmt("m=1e6 vs kappa-mu: outage %.2e, rate %.2e", d_out, d_rate));
  }
  {
    double worst = 0.0;
    for (double mu : {0.6, 1.0, 2.4})
      for (double mui : {0.5, 1.3}) {
        FadingProfile soi = make_profile(0.0, mu, 3.0, 2.0), intf = make_profile(0.0, mui, 5.0, 0.4);
        SirProblem pr{soi, {intf, intf, intf}, 1.7};
        const double z = pr.T * intf.theta / (soi.theta + pr.T * intf.theta);
        const double exact = boost::math::ibeta(mu, 3.0 * mui, z);
        worst = std::max({worst, std::fabs(outage_series(pr, 0).value - exact), std::fabs(outage_ed(pr).value - exact)});
      }
    l.check(worst <= 1e-10, fmt("kappa=0 vs incomplete beta max diff %.2e", worst));
  }
  {
    double worst = 0.0;
    for (double T : {0.1, 1.0, 3.7, 25.0})
      for (double g1 : {0.2, 1.0, 4.0}) {
        SirProblem pr{make_profile(0.0, 1.0, 2.0, 1.5), {make_profile(0.0, 1.0, 0.7, g1)}, T};
        const double exact = T * g1 / (1.5 + T * g1);
        worst = std::max({worst, std::fabs(outage_series(pr, 0).value - exact), std::fabs(outage_ed(pr).value - exact)});
      }
    l.check(worst <= 1e-10, fmt("Rayleigh/Rayleigh max diff %.2e", worst));
  }
  return l;
}

CellScenario fig9(double m) {
  return scenario(2, 3.4, make_profile(2.5, 3.0, m, 1.0), make_profile(1.0, 1.2, 1.5, 1.0));
}

Line criterion6() {
  Line l;
  {
    bool dec = true;
    double prev = 1.0;
    for (double m : {1.0, 2.0, 5.0, 10.0, 20.0}) {
      double v = outage_auto(problem_at(scenario(2, 3.6, make_profile(2.0, 1.0, m, 1.0), make_profile(1.0, 1.0, 10.0, 1.0)),
                                        600.0, kT3dB)).value;
      dec = dec && v < prev;
      prev = v;
    }
    prev = 1.0;
    for (double mu : {0.5, 1.0, 2.0, 3.0}) {
      double v = outage_auto(problem_at(scenario(2, 3.6, make_profile(2.0, mu, 5.0, 1.0), make_profile(1.0, 1.0, 10.0, 1.0)),
                                        600.0, kT3dB)).value;
      dec = dec && v < prev;
      prev = v;
    }
    l.check(dec, "outage decreasing in m and mu");
  }
  {
    double lo = 1.0, hi = 0.0;
    for (double m = 1.0; m <= 50.0; m += 1.0) {
      double v = outage_series(problem_at(scenario(2, 3.6, make_profile(0.0, 1.2, m, 1.0), make_profile(1.0, 1.0, 10.0, 1.0)),
                                          600.0, kT3dB), 50).value;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    l.check(hi - lo < 1e-9, fmt("kappa=0 variation over m in [1,50] is %.2e", hi - lo));
  }
  {
    // Rate sweep endpoints over m in [1, 20] at r = 650, alpha = 4.
    SeriesConfig cfg;
    cfg.max_index_per_dim = 2000;
    struct Target {
      double kappa, lo, hi;
    };
    bool any = false;
    std::string got;
    for (Target t : {Target{1.0, 1.553, 1.693}, Target{3.0, 1.428, 1.716}}) {
      double best = INFINITY, blo = 0.0, bhi = 0.0;
      for (int k = 0; k <= 2; ++k) {
        const double az = k * M_PI / 12.0;
        auto rate = [&](double m) {
          CellScenario sc = scenario(2, 4.0, make_profile(t.kappa, 3.0, m, 1.0), make_profile(0.5, 1.0, 10.0, 1.0), az);
          return rate_shadowed(problem_at(sc, 650.0, 1.0), std::nullopt, cfg);
        };
        double a = rate(1.0), b = rate(20.0);
        double dev = std::max(rel(a, t.lo), rel(b, t.hi));
        if (dev < best) {
          best = dev;
          blo = a;
          bhi = b;
        }
      }
      any = any || best > 0.05;
      got += fmt(" kappa=%g [%.3f, %.3f] vs [%.3f, %.3f]", t.kappa, blo, bhi, t.lo, t.hi);
    }
    l.check(!any, "rate endpoints within 5%:" + got);
  }
  {
    auto grid = uniform_radial_grid(1000.0, 8);
    bool analytic = true;
    for (double m : {1.0, 2.0, 5.0, 10.0, 15.0, 20.0}) {
      CellScenario sc = fig9(m);
      analytic = analytic && ffr_rate(sc, kT3dB, grid) > sfr_rate(sc, kT3dB, 2.0, grid);
    }
    l.check(analytic, "analytic FFR > SFR over m in [1,20]");
    bool simulated = true;
    McConfig mc;
    mc.iterations = 200;
    mc.threads = threads();
    ReuseConfig rc;
    rc.S_t = kT3dB;
    for (double m : {1.0, 5.0, 10.0, 20.0}) {
      CellScenario sc = fig9(m);
      rc.scheme = Scheme::ffr;
      double f = simulate_reuse(rc, sc, mc).mean;
      rc.scheme = Scheme::sfr;
      double s = simulate_reuse(rc, sc, mc).mean;
      simulated = simulated && f > s;
    }
    l.check(simulated, "simulated FFR > SFR over m in [1,20]");
  }
  return l;
}

}  // namespace

int main() {
  const std::function<Line()> criteria[] = {criterion1, criterion2, criterion3, criterion4, criterion5, criterion6};
  int failed = 0;
  for (int i = 0; i < 6; ++i) {
    auto t0 = std::chrono::steady_clock::now();
    Line l;
    try {
      l = criteria[i]();
    } catch (const std::exception& e) {
      l.pass = false;
      l.detail = std::string("error: ") + e.what();
    }
    double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %d: %s (%.0f s) %s\n", i + 1, l.pass ? "PASS" : "FAIL", s, l.detail.c_str());
    std::fflush(stdout);
    failed += !l.pass;
  }
  return failed == 0 ? 0 : 1;
}
