#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "kmsf/errors.hpp"
#include "kmsf/montecarlo.hpp"
#include "kmsf/sir_analysis.hpp"

namespace kmsf {

enum class Scheme { ffr, sfr };

struct ReuseConfig {
  Scheme scheme = Scheme::ffr;
  double S_t = 2.0;  // linear
  double beta = 2.0;
  int prbs = 50;
  int users_per_cell = 25;
  int classification_prb_count = 25;

  void validate() const {
    if (!(S_t > 0.0)) throw InvalidParameter("ReuseConfig: S_t must be > 0");
    if (!(beta >= 1.0)) throw InvalidParameter("ReuseConfig: beta must be >= 1");
    if (prbs < 1 || users_per_cell < 1 || prbs < users_per_cell)
      throw InvalidParameter("ReuseConfig: need prbs >= users_per_cell >= 1");
    if (classification_prb_count < 1 || classification_prb_count > prbs)
      throw InvalidParameter("ReuseConfig: classification_prb_count must be in [1, prbs]");
  }
  int prbs_per_user() const { return prbs / users_per_cell; }
};

struct Classification {
  double p_centre;
  double p_edge;
};

// Centre if the reuse-1 SIR exceeds S_t.
inline Classification classify(const SirProblem& reuse1, double S_t, const SeriesConfig& cfg = {}) {
  if (!(S_t > 0.0)) throw InvalidParameter("classify: S_t must be > 0");
  SirProblem p = reuse1;
  p.T = S_t;
  double edge = outage_auto(p, cfg).value;
  return {1.0 - edge, edge};
}

namespace detail {

// Interferer means at distance r: every site scaled by weight(site) on top of path loss.
template <class W>
SirProblem weighted_problem(const CellScenario& sc, double r, double soi_gain, W weight) {
  SirProblem p = problem_at(sc, r, 1.0);
  p.soi = scaled(p.soi, soi_gain);
  std::vector<FadingProfile> kept;
  for (std::size_t i = 0; i < p.interferers.size(); ++i) {
    double w = weight(i + 1);
    if (w > 0.0) kept.push_back(scaled(p.interferers[i], w));
  }
  p.interferers = std::move(kept);
  return p;
}

inline double sfr_gain(const CellScenario& sc, std::size_t site, int band_colour, double beta) {
  return sc.layout.colour(site) == band_colour ? beta : 1.0;
}

}  // namespace detail

// Cell-centre rate with all sites active and the FFR edge rate with the co-colour sites only.
inline double ffr_centre_rate(const CellScenario& sc, double r, std::optional<std::int64_t> P = std::nullopt, const SeriesConfig& cfg = {}) {
  return rate_shadowed(detail::weighted_problem(sc, r, 1.0, [](std::size_t) { return 1.0; }), P, cfg);
}

inline double ffr_edge_rate(const CellScenario& sc, double r, std::optional<std::int64_t> P = std::nullopt, const SeriesConfig& cfg = {}) {
  return rate_shadowed(
      detail::weighted_problem(sc, r, 1.0, [&](std::size_t i) { return sc.layout.colour(i) == 0 ? 1.0 : 0.0; }), P,
      cfg);
}

// SFR centre user: bands of colours 1 and 2 in turn, where that colour's sites serve their edge users at beta.
inline double sfr_centre_rate(const CellScenario& sc, double beta, double r, std::optional<std::int64_t> P = std::nullopt,
                              const SeriesConfig& cfg = {}) {
  double acc = 0.0;
  for (int c : {1, 2})
    acc += rate_shadowed(
        detail::weighted_problem(sc, r, 1.0, [&](std::size_t i) { return detail::sfr_gain(sc, i, c, beta); }), P, cfg);
  return 0.5 * acc;
}

inline double sfr_edge_rate(const CellScenario& sc, double beta, double r, std::optional<std::int64_t> P = std::nullopt,
                            const SeriesConfig& cfg = {}) {
  return rate_shadowed(
      detail::weighted_problem(sc, r, beta, [&](std::size_t i) { return detail::sfr_gain(sc, i, 0, beta); }), P, cfg);
}

inline double ffr_rate(const CellScenario& sc, double S_t, const std::vector<double>& radial_grid,
                       std::optional<std::int64_t> P = std::nullopt, const SeriesConfig& cfg = {}) {
  return radial_average(radial_grid, sc.layout.R, [&](double r) {
    auto cl = classify(problem_at(sc, r, S_t), S_t, cfg);
    return ffr_centre_rate(sc, r, P, cfg) * cl.p_centre + ffr_edge_rate(sc, r, P, cfg) * cl.p_edge / 3.0;
  });
}

inline double sfr_rate(const CellScenario& sc, double S_t, double beta, const std::vector<double>& radial_grid,
                       std::optional<std::int64_t> P = std::nullopt, const SeriesConfig& cfg = {}) {
  if (!(beta >= 1.0)) throw InvalidParameter("sfr_rate: beta must be >= 1");
  return radial_average(radial_grid, sc.layout.R, [&](double r) {
    auto cl = classify(problem_at(sc, r, S_t), S_t, cfg);
    return sfr_centre_rate(sc, beta, r, P, cfg) * cl.p_centre + sfr_edge_rate(sc, beta, r, P, cfg) * cl.p_edge;
  });
}

namespace detail {

inline double draw_weighted_sir(const FadingProfile& soi, const std::vector<FadingProfile>& intf,
                                const std::vector<double>& weight, Philox4x32& rng) {
  double g = sample_power(soi, rng);
  double i = 0.0;
  for (std::size_t k = 0; k < intf.size(); ++k)
    if (weight[k] > 0.0) i += weight[k] * sample_power(intf[k], rng);
  return g / i;
}

}  // namespace detail

// Load-based simulation: each trial drops one user uniformly on the disc of radius R,
// classifies it by the number of PRBs whose reuse-1 SIR exceeds S_t, then averages
// ln(1 + SIR) over its own PRBs under the scheme's band and power plan.
inline McEstimate simulate_reuse(const ReuseConfig& rc, const CellScenario& sc, const McConfig& mc) {
  rc.validate();
  const std::size_t n = sc.layout.interferer_count();
  if (sc.interferers.size() != n) throw InvalidParameter("simulate_reuse: one interferer profile per site is required");
  std::vector<double> ones(n, 1.0), co(n), band1(n), band2(n), edge_sfr(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int c = sc.layout.colour(i + 1);
    co[i] = c == 0 ? 1.0 : 0.0;
    band1[i] = c == 1 ? rc.beta : 1.0;
    band2[i] = c == 2 ? rc.beta : 1.0;
    edge_sfr[i] = c == 0 ? rc.beta : 1.0;
  }
  const int own = rc.prbs_per_user();
  return run_batches(mc, [&](std::int64_t, Philox4x32& rng) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double acc = 0.0;
    for (std::int64_t t = 0; t < mc.batch_size; ++t) {
      double r = sc.layout.R * std::sqrt(U(rng));
      while (r <= 0.0) r = sc.layout.R * std::sqrt(U(rng));
      const double az = 2.0 * M_PI * U(rng);
      SirProblem p = link_budget(place_user(sc.layout, r, az, sc.alpha), sc.soi, sc.interferers, 1.0);
      int above = 0;
      for (int k = 0; k < rc.prbs; ++k)
        if (detail::draw_weighted_sir(p.soi, p.interferers, ones, rng) > rc.S_t) ++above;
      const bool centre = above >= rc.classification_prb_count;
      double user = 0.0;
      for (int k = 0; k < own; ++k) {
        double sir;
        if (rc.scheme == Scheme::ffr) {
          sir = detail::draw_weighted_sir(p.soi, p.interferers, centre ? ones : co, rng);
          user += centre ? std::log1p(sir) : std::log1p(sir) / 3.0;
        } else if (centre) {
          sir = detail::draw_weighted_sir(p.soi, p.interferers, k % 2 == 0 ? band1 : band2, rng);
          user += std::log1p(sir);
        } else {
          sir = rc.beta * detail::draw_weighted_sir(p.soi, p.interferers, edge_sfr, rng);
          user += std::log1p(sir);
        }
      }
      acc += user / own;
    }
    return acc / mc.batch_size;
  });
}

}  // namespace kmsf
