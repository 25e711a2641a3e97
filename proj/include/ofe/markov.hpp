#pragma once

// 15-state order-flow chain: (price-change sign, volume quintile) states,
// rolling transition estimates, stationary distribution and the normalized
// stationary-weighted row entropy.

#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ofe/common.hpp"
#include "ofe/ingest.hpp"

namespace ofe {

inline constexpr int kNumStates = 15;
inline constexpr int kNumQuintiles = 5;
inline constexpr int kMatrixSize = kNumStates * kNumStates;

struct MarketState {
  int sign = 0;      // -1, 0, +1
  int quintile = 1;  // 1..5

  constexpr int index() const { return (sign + 1) * kNumQuintiles + (quintile - 1); }

  static constexpr MarketState from_index(int index) {
    return MarketState{index / kNumQuintiles - 1, index % kNumQuintiles + 1};
  }

  // Same volume quintile, opposite price direction.
  constexpr MarketState mirrored() const { return MarketState{-sign, quintile}; }

  bool operator==(const MarketState&) const = default;
};

struct StateObs {
  std::int64_t ts_s = 0;
  MarketState state;

  bool operator==(const StateObs&) const = default;
};

using CountMatrix = std::array<std::uint32_t, kMatrixSize>;
using ProbMatrix = std::array<double, kMatrixSize>;
using StateVector = std::array<double, kNumStates>;

struct TransitionMatrix {
  CountMatrix counts{};
  ProbMatrix probs{};
  std::int64_t window_end_s = 0;
  std::uint32_t n_transitions = 0;

  double operator()(int i, int j) const { return probs[i * kNumStates + j]; }

  // Row-normalizes counts; rows without observations become uniform.
  static TransitionMatrix from_counts(const CountMatrix& counts, std::int64_t window_end_s = 0) {
    TransitionMatrix m;
    m.counts = counts;
    m.window_end_s = window_end_s;
    for (int i = 0; i < kNumStates; ++i) {
      std::uint64_t row = 0;
      for (int j = 0; j < kNumStates; ++j) row += counts[i * kNumStates + j];
      m.n_transitions += static_cast<std::uint32_t>(row);
      for (int j = 0; j < kNumStates; ++j) {
        m.probs[i * kNumStates + j] =
            row == 0 ? 1.0 / kNumStates
                     : static_cast<double>(counts[i * kNumStates + j]) / static_cast<double>(row);
      }
    }
    return m;
  }

  // Wraps an arbitrary row-stochastic matrix (no counts attached).
  static TransitionMatrix from_probs(const ProbMatrix& probs) {
    TransitionMatrix m;
    m.probs = probs;
    return m;
  }
};

struct StationaryDist {
  StateVector pi{};
  double residual = 0.0;  // ||pi P - pi||_1
  int iterations = 0;
  bool converged = false;
};

struct StationaryOptions {
  double tolerance = 1e-10;  // residual required to flag convergence
  double target = 1e-13;     // iteration continues until this residual is reached
  int max_iterations = 10'000;
  // Plain steps x <- xP before switching to the lazy chain
  // L = (1 - w) P + w I, which has the same fixed points but cannot oscillate
  // on a periodic class. Lazy steps are taken in doubling blocks
  // x <- x L^(2^k), so slowly mixing windows cost O(log iterations) matrix
  // products; `iterations` reports the index of the returned iterate.
  int plain_iterations = 64;
  double lazy_weight = 0.25;
};

namespace detail {

inline void left_multiply(const StateVector& x, const ProbMatrix& p, StateVector& out) {
  out.fill(0.0);
  for (int i = 0; i < kNumStates; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    const double* row = &p[i * kNumStates];
    for (int j = 0; j < kNumStates; ++j) out[j] += xi * row[j];
  }
}

inline double l1_residual(const StateVector& pi, const ProbMatrix& p) {
  StateVector next;
  left_multiply(pi, p, next);
  double r = 0.0;
  for (int j = 0; j < kNumStates; ++j) r += std::abs(next[j] - pi[j]);
  return r;
}

inline void normalize(StateVector& x) {
  double sum = 0.0;
  for (double v : x) sum += v;
  for (double& v : x) v /= sum;
}

// out = a * b with rows renormalized to stay stochastic.
inline void square_stochastic(const ProbMatrix& a, ProbMatrix& out) {
  out.fill(0.0);
  for (int i = 0; i < kNumStates; ++i) {
    double* orow = &out[i * kNumStates];
    for (int k = 0; k < kNumStates; ++k) {
      const double aik = a[i * kNumStates + k];
      if (aik == 0.0) continue;
      const double* brow = &a[k * kNumStates];
      for (int j = 0; j < kNumStates; ++j) orow[j] += aik * brow[j];
    }
    double sum = 0.0;
    for (int j = 0; j < kNumStates; ++j) sum += orow[j];
    for (int j = 0; j < kNumStates; ++j) orow[j] /= sum;
  }
}

}  // namespace detail

// Stationary distribution by power iteration from the uniform vector,
// renormalized every step. Never throws: if the iteration cap is reached the
// best iterate is returned with converged = false.
inline StationaryDist stationary(const ProbMatrix& p, const StationaryOptions& opt = {}) {
  StationaryDist out;
  StateVector pi;
  pi.fill(1.0 / kNumStates);
  StateVector next;
  StateVector best = pi;
  double best_residual = std::numeric_limits<double>::infinity();

  auto consider = [&](const StateVector& x) {
    const double r = detail::l1_residual(x, p);
    if (r < best_residual) {
      best_residual = r;
      best = x;
    }
    return r;
  };

  int steps = 0;
  bool done = false;
  const int plain = std::min(opt.plain_iterations, opt.max_iterations);
  for (; steps < plain; ++steps) {
    detail::left_multiply(pi, p, next);
    double residual = 0.0;
    for (int j = 0; j < kNumStates; ++j) residual += std::abs(next[j] - pi[j]);
    if (residual < best_residual) {
      best_residual = residual;
      best = pi;
    }
    if (residual <= opt.target) {
      done = true;
      break;
    }
    pi = next;
    detail::normalize(pi);
  }
  if (!done) {
    consider(pi);
    ProbMatrix block;  // L^(2^k)
    const double hold = opt.lazy_weight;
    for (int i = 0; i < kMatrixSize; ++i) block[i] = (1.0 - hold) * p[i];
    for (int i = 0; i < kNumStates; ++i) block[i * kNumStates + i] += hold;
    ProbMatrix sq;
    const int base = steps;
    std::int64_t stride = 1;
    const StateVector start = pi;
    while (base + stride <= opt.max_iterations) {
      detail::left_multiply(start, block, next);
      detail::normalize(next);
      steps = static_cast<int>(base + stride);
      if (consider(next) <= opt.target) break;
      detail::square_stochastic(block, sq);
      block = sq;
      stride *= 2;
    }
  }
  out.pi = best;
  out.residual = best_residual;
  out.iterations = steps;
  out.converged = best_residual <= opt.tolerance;
  return out;
}

inline StationaryDist stationary(const TransitionMatrix& m, const StationaryOptions& opt = {}) {
  return stationary(m.probs, opt);
}

// Row entropy normalized by log 15. Rows whose nonzero entries are all equal
// evaluate exactly to log(k) / log(15); in particular uniform rows give 1 and
// deterministic rows give 0 with no rounding.
inline double normalized_row_entropy(const double* row) {
  static const double log_k = std::log(static_cast<double>(kNumStates));
  int nonzero = 0;
  double first = 0.0;
  bool flat = true;
  double acc = 0.0;
  for (int j = 0; j < kNumStates; ++j) {
    const double v = row[j];
    if (v <= 0.0) continue;
    if (nonzero == 0) {
      first = v;
    } else if (v != first) {
      flat = false;
    }
    ++nonzero;
    acc -= v * std::log(v);
  }
  if (nonzero <= 1) return 0.0;
  if (flat) return nonzero == kNumStates ? 1.0 : std::log(static_cast<double>(nonzero)) / log_k;
  return std::clamp(acc / log_k, 0.0, 1.0);
}

// H = sum_i pi_i h_i / sum_i pi_i with h_i the normalized row entropies and
// 0 log 0 = 0. Dividing by the realized mass of pi keeps H in [0, 1] exactly.
inline double entropy(const ProbMatrix& p, const StateVector& pi) {
  double num = 0.0;
  double mass = 0.0;
  for (int i = 0; i < kNumStates; ++i) {
    if (pi[i] <= 0.0) continue;
    num += pi[i] * normalized_row_entropy(&p[i * kNumStates]);
    mass += pi[i];
  }
  if (mass <= 0.0) return 0.0;
  return std::clamp(num / mass, 0.0, 1.0);
}

inline double entropy(const TransitionMatrix& m, const StationaryDist& d) {
  return entropy(m.probs, d.pi);
}

inline double entropy(const TransitionMatrix& m) { return entropy(m, stationary(m)); }

// Volume quintile ceil(5 k / n) where k counts window volumes <= v.
inline constexpr int volume_quintile(std::size_t at_or_below, std::size_t window_count) {
  if (window_count == 0) return kNumQuintiles;
  const std::size_t q = (kNumQuintiles * at_or_below + window_count - 1) / window_count;
  return static_cast<int>(std::clamp<std::size_t>(q, 1, kNumQuintiles));
}

// States for one session's bars. The first bar has no predecessor price and
// emits nothing; the volume CDF uses bars with ts in (t - window_s, t].
inline std::vector<StateObs> encode_states(std::span<const SecondBar> bars,
                                           std::int64_t window_s = 120) {
  if (window_s < 10) throw std::invalid_argument("window_s must be >= 10");
  std::vector<StateObs> out;
  if (bars.size() < 2) return out;
  out.reserve(bars.size() - 1);
  std::size_t lo = 0;
  for (std::size_t k = 0; k < bars.size(); ++k) {
    const std::int64_t t = bars[k].ts_s;
    while (bars[lo].ts_s <= t - window_s) ++lo;
    if (k == 0) continue;
    const std::int64_t v = bars[k].volume;
    std::size_t le = 0;
    for (std::size_t i = lo; i <= k; ++i) le += bars[i].volume <= v;
    const int sign = sign_of(bars[k].close - bars[k - 1].close);
    out.push_back({t, MarketState{sign, volume_quintile(le, k - lo + 1)}});
  }
  return out;
}

// Counts consecutive state pairs whose later element lies in (t - window_s, t].
inline TransitionMatrix estimate_transitions(std::span<const StateObs> states, std::int64_t t,
                                             std::int64_t window_s = 120) {
  CountMatrix counts{};
  for (std::size_t k = 1; k < states.size(); ++k) {
    const std::int64_t ts = states[k].ts_s;
    if (ts > t - window_s && ts <= t) {
      ++counts[states[k - 1].state.index() * kNumStates + states[k].state.index()];
    }
  }
  return TransitionMatrix::from_counts(counts, t);
}

struct EntropyPoint {
  std::int64_t ts_s = 0;
  double h = std::numeric_limits<double>::quiet_NaN();
  bool defined = false;
  std::uint32_t n_transitions = 0;
  bool converged = true;

  bool operator==(const EntropyPoint& o) const {
    return ts_s == o.ts_s && defined == o.defined && n_transitions == o.n_transitions &&
           converged == o.converged && (defined ? h == o.h : true);
  }
};

struct EntropyConfig {
  std::int64_t window_s = 120;
  std::uint32_t min_transitions = 30;
  StationaryOptions stationary;
};

// Rolling entropy over one session: one point per state-bearing bar, with the
// window never reaching outside the session's own bars.
inline std::vector<EntropyPoint> entropy_series(std::span<const SecondBar> bars,
                                                const EntropyConfig& cfg = {}) {
  const auto states = encode_states(bars, cfg.window_s);
  std::vector<EntropyPoint> out;
  out.reserve(states.size());
  CountMatrix counts{};
  std::uint32_t n = 0;
  std::size_t lo = 1;  // oldest transition (indexed by its later element) still in window
  for (std::size_t k = 0; k < states.size(); ++k) {
    const std::int64_t t = states[k].ts_s;
    if (k >= 1) {
      ++counts[states[k - 1].state.index() * kNumStates + states[k].state.index()];
      ++n;
    }
    while (lo <= k && lo >= 1 && states[lo].ts_s <= t - cfg.window_s) {
      --counts[states[lo - 1].state.index() * kNumStates + states[lo].state.index()];
      --n;
      ++lo;
    }
    EntropyPoint pt;
    pt.ts_s = t;
    pt.n_transitions = n;
    if (n >= cfg.min_transitions) {
      const auto m = TransitionMatrix::from_counts(counts, t);
      const auto d = stationary(m, cfg.stationary);
      pt.h = entropy(m, d);
      pt.defined = true;
      pt.converged = d.converged;
    }
    out.push_back(pt);
  }
  return out;
}

inline void write_entropy_csv(std::ostream& out, std::span<const EntropyPoint> pts) {
  std::string buf = "ts_s,h,defined,n_transitions\n";
  char tmp[64];
  for (const auto& p : pts) {
    detail::append_int(buf, p.ts_s);
    buf.push_back(',');
    if (p.defined) {
      auto [e, ec] = std::to_chars(tmp, tmp + sizeof tmp, p.h);
      buf.append(tmp, e);
    }
    buf += p.defined ? ",1," : ",0,";
    detail::append_int(buf, p.n_transitions);
    buf.push_back('\n');
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

inline std::vector<EntropyPoint> read_entropy_csv(std::istream& in,
                                                  const std::string& name = "entropy") {
  std::vector<EntropyPoint> pts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view v = detail::trim_cr(line);
    if (line_no == 1) {
      if (v != "ts_s,h,defined,n_transitions") {
        throw InputError(name + ": header must be 'ts_s,h,defined,n_transitions'");
      }
      continue;
    }
    if (v.empty()) continue;
    std::string_view f[4];
    std::size_t start = 0;
    int nf = 0;
    for (; nf < 4; ++nf) {
      const auto c = v.find(',', start);
      f[nf] = v.substr(start, c == std::string_view::npos ? std::string_view::npos : c - start);
      if (c == std::string_view::npos) {
        ++nf;
        break;
      }
      start = c + 1;
    }
    EntropyPoint p;
    std::int64_t defined = 0;
    std::int64_t n = 0;
    bool ok = nf == 4 && detail::parse_i64(f[0], p.ts_s) && detail::parse_i64(f[2], defined) &&
              detail::parse_i64(f[3], n) && (defined == 0 || defined == 1);
    if (ok && defined == 1) {
      auto [e, ec] = std::from_chars(f[1].data(), f[1].data() + f[1].size(), p.h);
      ok = ec == std::errc{} && e == f[1].data() + f[1].size();
    }
    if (!ok) throw InputError(name + ": malformed row at line " + std::to_string(line_no));
    p.defined = defined == 1;
    p.n_transitions = static_cast<std::uint32_t>(n);
    pts.push_back(p);
  }
  return pts;
}

inline void write_matrix(std::ostream& out, const ProbMatrix& p) {
  char tmp[64];
  for (int i = 0; i < kNumStates; ++i) {
    std::string row;
    for (int j = 0; j < kNumStates; ++j) {
      if (j) row.push_back(',');
      auto [e, ec] = std::to_chars(tmp, tmp + sizeof tmp, p[i * kNumStates + j]);
      row.append(tmp, e);
    }
    out << row << '\n';
  }
}

// Applies a relabeling sigma (old index -> new index) to a count matrix.
inline CountMatrix permute_counts(const CountMatrix& c, const std::array<int, kNumStates>& sigma) {
  CountMatrix out{};
  for (int i = 0; i < kNumStates; ++i) {
    for (int j = 0; j < kNumStates; ++j) {
      out[sigma[i] * kNumStates + sigma[j]] = c[i * kNumStates + j];
    }
  }
  return out;
}

// The buy/sell relabeling: sign s -> -s, quintile unchanged.
inline std::array<int, kNumStates> sign_swap_permutation() {
  std::array<int, kNumStates> sigma{};
  for (int i = 0; i < kNumStates; ++i) sigma[i] = MarketState::from_index(i).mirrored().index();
  return sigma;
}

}  // namespace ofe
