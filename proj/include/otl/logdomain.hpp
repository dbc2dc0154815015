#pragma once

// Log-domain arithmetic helpers. Quantities of the form c^d are kept as
// natural logs with an explicit sign where needed.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace otl {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(exp(a) + exp(b)), tolerating -inf.
inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

// log(exp(a) - exp(b)) for a >= b; returns -inf when they cancel.
inline double log_sub(double a, double b) {
  if (b == kNegInf) return a;
  if (a <= b) return kNegInf;
  return a + std::log1p(-std::exp(b - a));
}

// Pairwise tree reduction; result depends only on the element order.
inline double log_sum_exp(std::vector<double> xs) {
  if (xs.empty()) return kNegInf;
  while (xs.size() > 1) {
    std::size_t half = (xs.size() + 1) / 2;
    for (std::size_t i = 0; i + half < xs.size(); ++i) xs[i] = log_add(xs[i], xs[i + half]);
    xs.resize(half);
  }
  return xs[0];
}

inline double log_factorial(double n) { return std::lgamma(n + 1.0); }

// log(p!!) for integer p >= 0.
inline double log_double_factorial(long p) {
  if (p <= 0) return 0.0;
  if (p % 2 == 0) {
    const double k = static_cast<double>(p) / 2.0;
    return k * std::log(2.0) + std::lgamma(k + 1.0);  // (2k)!! = 2^k k!
  }
  const double k = (static_cast<double>(p) + 1.0) / 2.0;
  // (2k-1)!! = (2k)! / (2^k k!)
  return std::lgamma(2.0 * k + 1.0) - k * std::log(2.0) - std::lgamma(k + 1.0);
}

}  // namespace otl
