#include <gtest/gtest.h>

#include <random>

#include "ofe/common.hpp"
#include "ofe/stats.hpp"

using namespace ofe;

namespace {

// Two-sided Student-t tail by Simpson integration of the density.
double t_two_sided_p(double t, double df) {
  const double c = std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) / std::sqrt(df * M_PI);
  auto f = [&](double x) { return c * std::pow(1 + x * x / df, -(df + 1) / 2); };
  const int n = 200'000;
  const double a = 0.0;
  const double b = std::abs(t);
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4 : 2);
  return 1.0 - 2.0 * s * h / 3.0;
}

// Exact two-sided binomial p by direct summation of C(n,i)/2^n.
double exact_two_sided(std::int64_t k, std::int64_t n) {
  std::vector<long double> pmf(n + 1);
  long double c = std::pow(0.5L, static_cast<long double>(n));
  for (std::int64_t i = 0; i <= n; ++i) {
    pmf[i] = c;
    c = c * static_cast<long double>(n - i) / static_cast<long double>(i + 1);
  }
  long double p = 0.0L;
  for (std::int64_t i = 0; i <= n; ++i) {
    if (pmf[i] <= pmf[k] * (1 + 1e-12L)) p += pmf[i];
  }
  return static_cast<double>(std::min(1.0L, p));
}

}  // namespace

TEST(Welch, TextbookExample) {
  const std::vector<double> a{1, 2, 3, 4};
  const std::vector<double> b{2, 3, 4, 5};
  const auto r = welch_t(a, b);
  // Means 2.5 and 3.5, variances 5/3 each: t = -1 / sqrt(5/6), df = 6.
  EXPECT_NEAR(r.t, -1.0 / std::sqrt(5.0 / 6.0), 1e-12);
  EXPECT_NEAR(r.df, 6.0, 1e-12);
  EXPECT_NEAR(r.p, t_two_sided_p(r.t, r.df), 1e-7);
}

TEST(Welch, DegenerateCases) {
  const std::vector<double> a{1, 2, 3};
  const auto same = welch_t(a, a);
  EXPECT_EQ(same.t, 0.0);
  EXPECT_NEAR(same.p, 1.0, 1e-12);
  const std::vector<double> c{2, 2, 2};
  const auto flat = welch_t(c, c);
  EXPECT_EQ(flat.t, 0.0);
  EXPECT_EQ(flat.p, 1.0);
  const std::vector<double> d{3, 3, 3};
  EXPECT_EQ(welch_t(c, d).p, 0.0);
  EXPECT_THROW(welch_t(std::vector<double>{1}, a), std::invalid_argument);
}

TEST(Welch, PValuesMatchIntegratedDensity) {
  // Unequal sizes and variances.
  const std::vector<double> a{0.1, 0.5, 0.9, 1.7, 2.2, 0.4};
  const std::vector<double> b{1.1, 2.9, 3.7, 0.2, 5.1, 4.4, 2.8, 3.3, 4.0};
  const auto r = welch_t(a, b);
  EXPECT_NEAR(r.p, t_two_sided_p(r.t, r.df), 1e-7);
}

TEST(Welch, NullRejectionRateIsNominal) {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> n1(0.0, 1.0);
  std::normal_distribution<double> n2(0.0, 3.0);
  int reject = 0;
  const int trials = 10'000;
  std::vector<double> a(12);
  std::vector<double> b(20);
  for (int i = 0; i < trials; ++i) {
    for (auto& v : a) v = n1(rng);
    for (auto& v : b) v = n2(rng);
    reject += welch_t(a, b).p < 0.05;
  }
  EXPECT_NEAR(reject / static_cast<double>(trials), 0.05, 0.01);
}

TEST(Binomial, GoldenDirectionalTest) {
  const auto r = binomial_direction(108, 240);
  EXPECT_NEAR(r.z, -1.549, 0.001);
  EXPECT_NEAR(r.p, 0.121, 0.001);
}

TEST(Binomial, SymmetryAndCentre) {
  for (std::int64_t n : {1, 7, 100, 241}) {
    for (std::int64_t k = 0; k <= n; ++k) {
      const auto a = binomial_direction(k, n);
      const auto b = binomial_direction(n - k, n);
      EXPECT_EQ(a.z, -b.z);
      EXPECT_EQ(a.p, b.p);
      EXPECT_NEAR(a.exact_p, b.exact_p, 1e-12);
    }
  }
  const auto c = binomial_direction(50, 100);
  EXPECT_EQ(c.z, 0.0);
  EXPECT_EQ(c.p, 1.0);
  EXPECT_EQ(c.exact_p, 1.0);
}

TEST(Binomial, ExactMatchesSummationAndNormalApprox) {
  for (std::int64_t n : {100, 150, 240, 500, 1000}) {
    for (std::int64_t k = n / 2 - n / 8; k <= n / 2 + n / 8; k += 3) {
      const auto r = binomial_direction(k, n);
      EXPECT_NEAR(r.exact_p, exact_two_sided(k, n), 1e-9) << k << "/" << n;
      // Continuity makes the plain normal approximation conservative by at
      // most about one half-step in z.
      EXPECT_NEAR(r.exact_p, r.p, 0.08) << k << "/" << n;
    }
  }
}

TEST(Binomial, FairCoinBand) {
  const auto [lo, hi] = fair_coin_band(240);
  EXPECT_NEAR(lo, 0.5 - 1.96 * std::sqrt(0.25 / 240), 1e-4);
  EXPECT_NEAR(hi - 0.5, 0.5 - lo, 1e-15);
}

TEST(Percentile, LinearInterpolation) {
  const std::vector<double> x{4, 1, 3, 2, 5};
  EXPECT_EQ(percentile(x, 0.0), 1.0);
  EXPECT_EQ(percentile(x, 1.0), 5.0);
  EXPECT_EQ(percentile(x, 0.5), 3.0);
  EXPECT_NEAR(percentile(x, 0.05), 1.2, 1e-12);
  EXPECT_NEAR(percentile(x, 0.95), 4.8, 1e-12);
  EXPECT_THROW(percentile({}, 0.5), std::invalid_argument);
}

TEST(Rng, StreamsAreDeterministicAndDistinct) {
  auto a = make_stream(7, 3, 1);
  auto b = make_stream(7, 3, 1);
  auto c = make_stream(7, 4, 1);
  const auto x = a();
  EXPECT_EQ(x, b());
  EXPECT_NE(x, c());
  auto r = make_stream(1, 0, 0);
  double s = 0.0;
  for (int i = 0; i < 100'000; ++i) s += uniform01(r);
  EXPECT_NEAR(s / 100'000, 0.5, 0.005);
}

TEST(ParallelFor, ResultIndependentOfWorkers) {
  std::vector<double> one(1000);
  std::vector<double> many(1000);
  auto body = [](std::vector<double>& out) {
    return [&out](std::size_t i) {
      auto rng = make_stream(11, i, 2);
      out[i] = standard_normal(rng);
    };
  };
  parallel_for(one.size(), 1, body(one));
  parallel_for(many.size(), 8, body(many));
  EXPECT_EQ(one, many);
}
