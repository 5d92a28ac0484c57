#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <ostream>
#include <thread>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "kmsf/errors.hpp"
#include "kmsf/fading.hpp"
#include "kmsf/geometry.hpp"

namespace kmsf {

// Philox4x32-10 counter-based generator. The key is the 64-bit seed; counter words 2-3
// carry the stream (batch) index and words 0-1 count blocks within the stream.
class Philox4x32 {
 public:
  using result_type = std::uint32_t;
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  Philox4x32(std::uint64_t seed, std::uint64_t stream)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        ctr_{0, 0, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)} {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (idx_ == 4) {
      out_ = bijection(ctr_, key_);
      if (++ctr_[0] == 0) ++ctr_[1];
      idx_ = 0;
    }
    return out_[idx_++];
  }

  static Block bijection(Block c, Key k) {
    constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        k[0] += W0;
        k[1] += W1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(M0) * c[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(M1) * c[2];
      c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
    }
    return c;
  }

 private:
  Key key_;
  Block ctr_;
  Block out_{};
  int idx_ = 4;
};

struct McConfig {
  std::int64_t iterations = 10'000;  // number of batches
  std::int64_t batch_size = 100;
  std::uint64_t seed = 1;
  double confidence = 0.95;
  unsigned threads = 1;

  void validate() const {
    if (iterations < 2) throw InvalidParameter("McConfig: iterations must be >= 2");
    if (batch_size < 1) throw InvalidParameter("McConfig: batch_size must be >= 1");
    if (confidence != 0.95 && confidence != 0.99) throw InvalidParameter("McConfig: confidence must be 0.95 or 0.99");
    if (threads < 1) throw InvalidParameter("McConfig: threads must be >= 1");
  }
};

struct McEstimate {
  double mean = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::int64_t batches = 0;
  std::vector<double> batch_means;

  double half_width() const { return 0.5 * (ci_hi - ci_lo); }
  bool contains(double v) const { return ci_lo <= v && v <= ci_hi; }
};

inline double normal_quantile_two_sided(double confidence) {
  return boost::math::quantile(boost::math::normal(), 0.5 + 0.5 * confidence);
}

// Grand mean and mean +- z s / sqrt(B) over the batch means.
inline McEstimate summarize(std::vector<double> means, double confidence) {
  McEstimate e;
  e.batches = static_cast<std::int64_t>(means.size());
  double sum = 0.0;
  for (double v : means) sum += v;
  e.mean = sum / e.batches;
  double ss = 0.0;
  for (double v : means) ss += (v - e.mean) * (v - e.mean);
  const double sd = std::sqrt(ss / (e.batches - 1));
  const double hw = normal_quantile_two_sided(confidence) * sd / std::sqrt(static_cast<double>(e.batches));
  e.ci_lo = e.mean - hw;
  e.ci_hi = e.mean + hw;
  e.batch_means = std::move(means);
  return e;
}

// Runs batch_fn(batch_index, rng) for every batch. Each batch owns the substream
// (seed, batch_index), so results do not depend on the thread count.
inline McEstimate run_batches(const McConfig& mc, const std::function<double(std::int64_t, Philox4x32&)>& batch_fn) {
  mc.validate();
  std::vector<double> means(static_cast<std::size_t>(mc.iterations));
  auto work = [&](unsigned tid) {
    for (std::int64_t b = tid; b < mc.iterations; b += mc.threads) {
      Philox4x32 rng(mc.seed, static_cast<std::uint64_t>(b));
      means[static_cast<std::size_t>(b)] = batch_fn(b, rng);
    }
  };
  if (mc.threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < mc.threads; ++t) pool.emplace_back(work, t);
    for (auto& t : pool) t.join();
  }
  return summarize(std::move(means), mc.confidence);
}

namespace detail {

inline double draw_sir(const SirProblem& p, Philox4x32& rng) {
  double g = sample_power(p.soi, rng);
  double i = 0.0;
  for (const auto& f : p.interferers) i += sample_power(f, rng);
  return g / i;
}

}  // namespace detail

inline McEstimate simulate_outage(const SirProblem& p, const McConfig& mc) {
  if (p.interferers.empty()) throw InvalidParameter("simulate_outage: at least one interferer is required");
  return run_batches(mc, [&](std::int64_t, Philox4x32& rng) {
    std::int64_t hits = 0;
    for (std::int64_t t = 0; t < mc.batch_size; ++t)
      if (detail::draw_sir(p, rng) < p.T) ++hits;
    return static_cast<double>(hits) / mc.batch_size;
  });
}

inline McEstimate simulate_rate(const SirProblem& p, const McConfig& mc) {
  if (p.interferers.empty()) throw InvalidParameter("simulate_rate: at least one interferer is required");
  return run_batches(mc, [&](std::int64_t, Philox4x32& rng) {
    double acc = 0.0;
    for (std::int64_t t = 0; t < mc.batch_size; ++t) acc += std::log1p(detail::draw_sir(p, rng));
    return acc / mc.batch_size;
  });
}

// sup |F_n - F| over n draws, for any cdf.
inline double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf_fn) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    double F = cdf_fn(sample[i]);
    d = std::max({d, (i + 1) / n - F, F - i / n});
  }
  return d;
}

inline double ks_validate_sampler(const FadingProfile& profile, std::int64_t n, std::uint64_t seed = 1) {
  if (n < 10'000) throw InvalidParameter("ks_validate_sampler: n must be >= 1e4");
  Philox4x32 rng(seed, 0);
  std::vector<double> s(static_cast<std::size_t>(n));
  for (auto& v : s) v = sample_power(profile, rng);
  return ks_statistic(std::move(s), [&](double x) { return cdf(profile, x); });
}

inline void write_batch_csv(const McEstimate& e, std::ostream& os) {
  os << "batch_index,batch_mean\n";
  char buf[64];
  for (std::size_t i = 0; i < e.batch_means.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.12g\n", i, e.batch_means[i]);
    os << buf;
  }
}

}  // namespace kmsf
