#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace ofe {

// Bad or unreadable input (CLI exit code 2).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Protocol violation or not enough data for the requested protocol (exit code 3).
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kBpsPerUnit = 1e4;

// Log return in basis points.
inline double log_return_bps(double from_px, double to_px) {
  return std::log(to_px / from_px) * kBpsPerUnit;
}

inline int sign_of(double x) { return (x > 0.0) - (x < 0.0); }

// SplitMix64 finalizer, used to derive independent RNG streams from
// (seed, stream index) so that results never depend on scheduling.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream,
                                   std::uint64_t salt = 0) {
  std::uint64_t s = mix64(seed ^ mix64(stream ^ mix64(salt)));
  std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(salt)};
  return std::mt19937_64(seq);
}

// Uniform double in [0, 1) built from the raw 64-bit output; unlike
// std::uniform_real_distribution this is identical across standard libraries.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n) by rejection.
inline std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

inline double standard_normal(std::mt19937_64& rng) {
  // Box-Muller; one draw per call keeps the stream position predictable.
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

inline std::uint64_t poisson(std::mt19937_64& rng, double mean) {
  if (mean <= 0.0) return 0;
  if (mean < 30.0) {
    const double limit = std::exp(-mean);
    double p = uniform01(rng);
    std::uint64_t k = 0;
    while (p > limit) {
      ++k;
      p *= uniform01(rng);
    }
    return k;
  }
  const double x = std::round(mean + std::sqrt(mean) * standard_normal(rng));
  return x < 0.0 ? 0 : static_cast<std::uint64_t>(x);
}

// In-place Fisher-Yates shuffle driven by uniform_index.
template <typename T>
void shuffle(std::span<T> v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[uniform_index(rng, i)]);
  }
}

// Runs body(i) for i in [0, n) on at most `workers` threads. Each index is
// handled exactly once; callers write results into slot i so the output is
// independent of the worker count.
inline void parallel_for(std::size_t n, unsigned workers,
                         const std::function<void(std::size_t)>& body) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) body(i);
    });
  }
}

// Linear-interpolation percentile over sorted data (inclusive definition:
// position (n - 1) * q between order statistics).
inline double percentile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("percentile of empty sample");
  if (q <= 0.0) return sorted.front();
  if (q >= 1.0) return sorted.back();
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline double percentile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  return percentile_sorted(values, q);
}

}  // namespace ofe
