#pragma once

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <utility>

namespace ofe {

struct Moments {
  std::size_t n = 0;
  double mean = 0.0;
  double var = 0.0;  // unbiased (n - 1)
};

inline Moments moments(std::span<const double> x) {
  Moments m;
  m.n = x.size();
  if (m.n == 0) return m;
  m.mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(m.n);
  if (m.n < 2) return m;
  double ss = 0.0;
  for (double v : x) ss += (v - m.mean) * (v - m.mean);
  m.var = ss / static_cast<double>(m.n - 1);
  return m;
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

inline double two_sided_normal_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
};

// Welch's unequal-variance t-test with Welch-Satterthwaite degrees of freedom.
inline WelchResult welch_t(const Moments& a, const Moments& b) {
  if (a.n < 2 || b.n < 2) throw std::invalid_argument("welch_t needs at least 2 per sample");
  const double va = a.var / static_cast<double>(a.n);
  const double vb = b.var / static_cast<double>(b.n);
  WelchResult r;
  const double se2 = va + vb;
  if (se2 <= 0.0) {
    if (a.mean == b.mean) return r;
    r.t = a.mean > b.mean ? std::numeric_limits<double>::infinity()
                          : -std::numeric_limits<double>::infinity();
    r.df = static_cast<double>(a.n + b.n - 2);
    r.p = 0.0;
    return r;
  }
  r.t = (a.mean - b.mean) / std::sqrt(se2);
  r.df = se2 * se2 /
         (va * va / static_cast<double>(a.n - 1) + vb * vb / static_cast<double>(b.n - 1));
  boost::math::students_t dist(r.df);
  r.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
  r.p = std::clamp(r.p, 0.0, 1.0);
  return r;
}

inline WelchResult welch_t(std::span<const double> a, std::span<const double> b) {
  return welch_t(moments(a), moments(b));
}

struct BinomialResult {
  double z = 0.0;
  double p = 1.0;        // two-sided normal approximation
  double exact_p = 1.0;  // two-sided exact (sum of outcomes no more likely than k)
};

inline double binomial_log_pmf(std::int64_t k, std::int64_t n) {
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0) - static_cast<double>(n) * std::log(2.0);
}

// Two-sided test of k successes in n trials against p = 1/2.
inline BinomialResult binomial_direction(std::int64_t k, std::int64_t n) {
  if (n < 1 || k < 0 || k > n) throw std::invalid_argument("binomial_direction needs 0 <= k <= n, n >= 1");
  BinomialResult r;
  const double nd = static_cast<double>(n);
  r.z = (static_cast<double>(k) - nd / 2.0) / std::sqrt(nd / 4.0);
  r.p = std::min(1.0, two_sided_normal_p(r.z));
  // Outcomes are symmetric about n/2, so "no more likely than k" is the pair
  // of tails at distance >= |k - n/2|.
  const std::int64_t lo = std::min(k, n - k);
  double tail = 0.0;
  for (std::int64_t i = 0; i <= lo; ++i) tail += std::exp(binomial_log_pmf(i, n));
  r.exact_p = 2.0 * k == n ? 1.0 : std::min(1.0, 2.0 * tail);
  return r;
}

// 95% two-sided normal band for the success fraction of a fair coin.
inline std::pair<double, double> fair_coin_band(std::int64_t n, double z = 1.959963984540054) {
  const double half = z * std::sqrt(0.25 / static_cast<double>(n));
  return {0.5 - half, 0.5 + half};
}

}  // namespace ofe
