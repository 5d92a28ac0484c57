#pragma once

#include <algorithm>
#include <cstdint>

#include "kmsf/errors.hpp"

namespace kmsf {

// Truncation control shared by every series in the library.
//
// max_total_terms bounds the number of terms (scalar series) or total-degree
// shells (multivariate series) generated by one evaluation. Shells are kept
// in memory, so an internal ceiling of kShellCeiling applies on top of it. max_index_per_dim caps outer single-index sums: the mixture
// index p of the outage series and the first E_D index.
struct SeriesConfig {
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;
  std::int64_t max_total_terms = 10'000'000;
  std::int64_t max_index_per_dim = 200;

  static constexpr std::int64_t kShellCeiling = 4'000'000;

  void validate() const {
    if (!(abs_tol > 0) || !(rel_tol > 0))
      throw InvalidParameter("SeriesConfig: tolerances must be positive");
    if (max_total_terms < 1 || max_index_per_dim < 1)
      throw InvalidParameter("SeriesConfig: caps must be >= 1");
  }

  std::int64_t shell_cap() const { return std::min(max_total_terms, kShellCeiling); }
};

}  // namespace kmsf
