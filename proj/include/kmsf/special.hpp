#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include "kmsf/errors.hpp"

namespace kmsf {

// Value stored as sign * exp(log_abs).
struct SignedLog {
  double log_abs = -std::numeric_limits<double>::infinity();
  int sign = 0;

  double value() const { return sign == 0 ? 0.0 : sign * std::exp(log_abs); }
  static SignedLog from(double v) {
    if (v == 0.0) return {};
    return {std::log(std::fabs(v)), v > 0 ? 1 : -1};
  }
  SignedLog operator*(const SignedLog& o) const {
    if (sign == 0 || o.sign == 0) return {};
    return {log_abs + o.log_abs, sign * o.sign};
  }
};

inline bool is_nonpositive_integer(double x) { return x <= 0.0 && x == std::floor(x); }

// log|Gamma(x)| with the sign of Gamma(x). Reentrant (no signgam).
inline SignedLog log_gamma_signed(double x) {
  if (is_nonpositive_integer(x)) throw DomainError("log_gamma_signed: pole at nonpositive integer");
  int s = 1;
  double lg = ::lgamma_r(x, &s);
  return {lg, s};
}

inline double log_gamma(double x) {
  SignedLog g = log_gamma_signed(x);
  if (g.sign < 0) throw DomainError("log_gamma: negative gamma value");
  return g.log_abs;
}

// (a)_k in log-magnitude + sign form.
inline SignedLog log_pochhammer(double a, std::int64_t k) {
  if (k == 0) return {0.0, 1};
  if (is_nonpositive_integer(a)) {
    auto n = static_cast<std::int64_t>(-a);
    if (k > n) return {};
    double la = log_gamma(static_cast<double>(n + 1)) - log_gamma(static_cast<double>(n - k + 1));
    return {la, (k % 2 == 0) ? 1 : -1};
  }
  if (k <= 64) {
    long double prod = 1.0L;
    for (std::int64_t i = 0; i < k; ++i) prod *= static_cast<long double>(a) + i;
    if (prod == 0.0L) return {};
    return {static_cast<double>(std::log(std::fabs(prod))), prod > 0 ? 1 : -1};
  }
  SignedLog num = log_gamma_signed(a + static_cast<double>(k));
  SignedLog den = log_gamma_signed(a);
  return {num.log_abs - den.log_abs, num.sign * den.sign};
}

inline double pochhammer(double a, std::int64_t k) {
  if (k < 0) throw InvalidParameter("pochhammer: k must be nonnegative");
  return log_pochhammer(a, k).value();
}

// Neumaier compensated summation.
template <class T>
class CompensatedSum {
 public:
  void add(T v) {
    T t = sum_ + v;
    if (std::fabs(sum_) >= std::fabs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  T value() const { return sum_ + comp_; }

 private:
  T sum_ = 0;
  T comp_ = 0;
};

}  // namespace kmsf
