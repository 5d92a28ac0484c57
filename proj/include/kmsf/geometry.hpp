#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ostream>
#include <string>
#include <vector>

#include "kmsf/errors.hpp"
#include "kmsf/fading.hpp"

namespace kmsf {

struct Point {
  double x = 0.0, y = 0.0;
};

// Hexagonal layout. R is the centre-to-edge distance, so neighbouring sites sit 2R apart.
// Site i has lattice coordinates (u, v) with position u*(2R, 0) + v*(R, sqrt(3) R).
struct NetworkLayout {
  double R = 1000.0;
  int tiers = 2;
  std::vector<Point> bs_positions;  // index 0 is the serving site at the origin
  std::vector<int> lattice_u, lattice_v;
  std::vector<int> ring;  // hex distance from the serving site

  std::size_t interferer_count() const { return bs_positions.size() - 1; }
  // Reuse-3 colour of site i; site 0 has colour 0 and no two neighbours share a colour.
  int colour(std::size_t i) const { return (((lattice_u[i] - lattice_v[i]) % 3) + 3) % 3; }
};

struct UserLink {
  double r = 0.0;
  double azimuth = 0.0;
  double alpha = 4.0;
  std::vector<double> d;  // distance to interferer i+1
};

struct SirProblem {
  FadingProfile soi;
  std::vector<FadingProfile> interferers;
  double T = 1.0;
};

inline NetworkLayout build_hex_layout(double R, int tiers) {
  if (!(R > 0.0) || !std::isfinite(R)) throw InvalidParameter("build_two_tier_hex: R must be > 0");
  if (tiers < 1) throw InvalidParameter("build_two_tier_hex: tiers must be >= 1");
  NetworkLayout L;
  L.R = R;
  L.tiers = tiers;
  auto add = [&](int u, int v) {
    L.lattice_u.push_back(u);
    L.lattice_v.push_back(v);
    L.ring.push_back((std::abs(u) + std::abs(v) + std::abs(u + v)) / 2);
    L.bs_positions.push_back({R * (2.0 * u + v), R * std::sqrt(3.0) * v});
  };
  add(0, 0);
  for (int ring = 1; ring <= tiers; ++ring)
    for (int u = -ring; u <= ring; ++u)
      for (int v = -ring; v <= ring; ++v)
        if ((std::abs(u) + std::abs(v) + std::abs(u + v)) / 2 == ring) add(u, v);
  return L;
}

inline NetworkLayout build_two_tier_hex(double R) { return build_hex_layout(R, 2); }

inline UserLink place_user(const NetworkLayout& L, double r, double azimuth, double alpha) {
  if (!(r > 0.0) || r > L.R * (1.0 + 1e-12)) throw InvalidParameter("place_user: need 0 < r <= R");
  if (!(alpha >= 2.0)) throw InvalidParameter("place_user: alpha must be >= 2");
  UserLink u{r, azimuth, alpha, {}};
  const Point p{r * std::cos(azimuth), r * std::sin(azimuth)};
  for (std::size_t i = 1; i < L.bs_positions.size(); ++i)
    u.d.push_back(std::hypot(L.bs_positions[i].x - p.x, L.bs_positions[i].y - p.y));
  return u;
}

inline SirProblem link_budget(const UserLink& link, const FadingProfile& soi,
                              const std::vector<FadingProfile>& interferers, double T) {
  if (interferers.size() != link.d.size())
    throw InvalidParameter("link_budget: " + std::to_string(interferers.size()) + " interferer profiles for " +
                           std::to_string(link.d.size()) + " interfering sites");
  if (!(T > 0.0)) throw InvalidParameter("link_budget: T must be > 0");
  SirProblem p{scaled(soi, std::pow(link.r, -link.alpha)), {}, T};
  for (std::size_t i = 0; i < interferers.size(); ++i)
    p.interferers.push_back(scaled(interferers[i], std::pow(link.d[i], -link.alpha)));
  return p;
}

inline void write_layout_csv(const NetworkLayout& L, std::ostream& os) {
  os << "bs_index,x_m,y_m\n";
  char buf[128];
  for (std::size_t i = 0; i < L.bs_positions.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.12g,%.12g\n", i, L.bs_positions[i].x, L.bs_positions[i].y);
    os << buf;
  }
}

}  // namespace kmsf
