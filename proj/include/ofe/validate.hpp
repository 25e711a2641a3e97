#pragma once

// Walk-forward orchestration, magnitude statistics, placebo tests, profit
// attribution and the one-at-a-time parameter sweep.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ofe/backtest.hpp"
#include "ofe/common.hpp"
#include "ofe/dataset.hpp"
#include "ofe/signal.hpp"
#include "ofe/stats.hpp"

namespace ofe {

// ---------------------------------------------------------------------------
// Folds

struct FoldSpec {
  int train_days = 10;
  int test_days = 5;

  void validate() const {
    if (train_days < 1 || test_days < 1) throw InputError("fold spec needs train_days, test_days >= 1");
  }
};

// Half-open index ranges into the chronologically sorted session list.
struct Fold {
  std::size_t train_begin = 0;
  std::size_t train_end = 0;
  std::size_t test_begin = 0;
  std::size_t test_end = 0;
};

inline int achievable_folds(std::size_t n_days, const FoldSpec& spec) {
  if (static_cast<int>(n_days) < spec.train_days + spec.test_days) return 0;
  return (static_cast<int>(n_days) - spec.train_days) / spec.test_days;
}

// Rolling folds: fold k trains on the train_days immediately before its test
// block, and test blocks tile the days after the first training window.
inline std::vector<Fold> make_folds(std::size_t n_days, const FoldSpec& spec) {
  spec.validate();
  const int n = achievable_folds(n_days, spec);
  if (n < 1) {
    throw ProtocolError("insufficient data: " + std::to_string(n_days) + " trading days, " +
                        std::to_string(spec.train_days + spec.test_days) +
                        " needed for one fold (achievable folds: 0)");
  }
  std::vector<Fold> folds;
  for (int k = 0; k < n; ++k) {
    Fold f;
    f.test_begin = static_cast<std::size_t>(spec.train_days + k * spec.test_days);
    f.test_end = f.test_begin + static_cast<std::size_t>(spec.test_days);
    f.train_end = f.test_begin;
    f.train_begin = f.train_end - static_cast<std::size_t>(spec.train_days);
    folds.push_back(f);
  }
  return folds;
}

// Hard anti-leakage check: every training bar precedes every test bar.
inline void audit_fold(std::span<const SessionData> sessions, const Fold& f) {
  std::int64_t max_train = INT64_MIN;
  std::int64_t min_test = INT64_MAX;
  for (std::size_t i = f.train_begin; i < f.train_end; ++i) {
    for (const auto& b : sessions[i].bars) max_train = std::max(max_train, b.ts_s);
  }
  for (std::size_t i = f.test_begin; i < f.test_end; ++i) {
    for (const auto& b : sessions[i].bars) min_test = std::min(min_test, b.ts_s);
  }
  if (!(max_train < min_test)) {
    throw ProtocolError("fold leaks: training data at " + std::to_string(max_train) +
                        " is not before test data at " + std::to_string(min_test));
  }
}

// ---------------------------------------------------------------------------
// Magnitude statistics

// Defined entropy points that have a full forward horizon, in time order.
struct MagnitudeSample {
  std::vector<double> h;
  std::vector<double> abs_ret_bps;
  std::vector<double> ret_bps;
  std::vector<std::int64_t> ts_s;

  std::size_t size() const { return h.size(); }
};

// Forward return from bar k to the last bar at or before ts + horizon,
// defined when the session has a bar at or after ts + horizon.
inline std::optional<double> forward_return_bps(std::span<const SecondBar> bars, std::size_t k,
                                                std::int64_t horizon_s) {
  const std::int64_t target = bars[k].ts_s + horizon_s;
  if (bars.back().ts_s < target) return std::nullopt;
  const auto j = bar_at_or_before(bars, target);
  return log_return_bps(bars[k].close, bars[static_cast<std::size_t>(j)].close);
}

inline MagnitudeSample collect_magnitude_sample(std::span<const SessionData> sessions,
                                                std::int64_t horizon_s = 300) {
  MagnitudeSample s;
  for (const auto& sd : sessions) {
    for (std::size_t k = 1; k < sd.bars.size(); ++k) {
      const EntropyPoint* e = sd.entropy_at_bar(k);
      if (!e || !e->defined) continue;
      const auto r = forward_return_bps(sd.bars, k, horizon_s);
      if (!r) continue;
      s.h.push_back(e->h);
      s.ret_bps.push_back(*r);
      s.abs_ret_bps.push_back(std::abs(*r));
      s.ts_s.push_back(sd.bars[k].ts_s);
    }
  }
  return s;
}

// Quintile membership by entropy rank (ties broken by time order), 0 = lowest.
inline std::vector<std::uint8_t> entropy_quintiles(std::span<const double> h) {
  std::vector<std::size_t> order(h.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return h[a] < h[b]; });
  std::vector<std::uint8_t> q(h.size());
  const std::size_t n = h.size();
  for (std::size_t r = 0; r < n; ++r) q[order[r]] = static_cast<std::uint8_t>(r * 5 / n);
  return q;
}

struct QuintileRow {
  int quintile = 0;  // 1..5
  std::size_t n = 0;
  double h_min = 0.0;
  double h_max = 0.0;
  double mean_abs_bps = 0.0;
  double se_bps = 0.0;
  double mean_signed_bps = 0.0;
  double frac_positive = 0.0;
};

struct MagnitudeTable {
  std::vector<QuintileRow> quintiles;
  std::size_t n = 0;
  double unconditional_mean_bps = 0.0;
  double tail_threshold = 0.0;  // entropy percentile used for the tail
  double tail_mean_bps = 0.0;
  std::size_t tail_n = 0;
  double q1_q5_ratio = std::numeric_limits<double>::quiet_NaN();
  WelchResult q1_vs_q5;
  double tail_ratio = std::numeric_limits<double>::quiet_NaN();  // tail mean / unconditional
  WelchResult tail_vs_rest;
  double ratio_block_se = std::numeric_limits<double>::quiet_NaN();
  bool empty_quintile = false;
};

inline double q1_q5_ratio(std::span<const double> abs_ret, std::span<const std::uint8_t> q) {
  double s1 = 0.0;
  double s5 = 0.0;
  std::size_t n1 = 0;
  std::size_t n5 = 0;
  for (std::size_t i = 0; i < abs_ret.size(); ++i) {
    if (q[i] == 0) {
      s1 += abs_ret[i];
      ++n1;
    } else if (q[i] == 4) {
      s5 += abs_ret[i];
      ++n5;
    }
  }
  if (n1 == 0 || n5 == 0 || s5 == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (s1 / static_cast<double>(n1)) / (s5 / static_cast<double>(n5));
}

struct MagnitudeOptions {
  double tail_pct = 0.05;
  std::size_t block_len = 300;
  int block_reps = 200;
  std::uint64_t seed = 7;
};

inline MagnitudeTable magnitude_stats(const MagnitudeSample& s, const MagnitudeOptions& opt = {}) {
  MagnitudeTable t;
  t.n = s.size();
  t.quintiles.resize(5);
  for (int q = 0; q < 5; ++q) t.quintiles[q].quintile = q + 1;
  if (t.n == 0) {
    t.empty_quintile = true;
    return t;
  }
  const auto q = entropy_quintiles(s.h);
  std::vector<std::vector<double>> groups(5);
  std::vector<double> signed_sum(5, 0.0);
  std::vector<std::size_t> positive(5, 0);
  for (int k = 0; k < 5; ++k) {
    t.quintiles[k].h_min = std::numeric_limits<double>::infinity();
    t.quintiles[k].h_max = -std::numeric_limits<double>::infinity();
  }
  for (std::size_t i = 0; i < t.n; ++i) {
    auto& row = t.quintiles[q[i]];
    groups[q[i]].push_back(s.abs_ret_bps[i]);
    signed_sum[q[i]] += s.ret_bps[i];
    positive[q[i]] += s.ret_bps[i] > 0.0;
    row.h_min = std::min(row.h_min, s.h[i]);
    row.h_max = std::max(row.h_max, s.h[i]);
  }
  for (int k = 0; k < 5; ++k) {
    auto& row = t.quintiles[k];
    row.n = groups[k].size();
    if (row.n == 0) {
      t.empty_quintile = true;
      continue;
    }
    const auto m = moments(groups[k]);
    row.mean_abs_bps = m.mean;
    row.se_bps = row.n > 1 ? std::sqrt(m.var / static_cast<double>(row.n)) : 0.0;
    row.mean_signed_bps = signed_sum[k] / static_cast<double>(row.n);
    row.frac_positive = static_cast<double>(positive[k]) / static_cast<double>(row.n);
  }
  t.unconditional_mean_bps = moments(s.abs_ret_bps).mean;
  if (!t.empty_quintile && t.quintiles[4].mean_abs_bps > 0.0) {
    t.q1_q5_ratio = t.quintiles[0].mean_abs_bps / t.quintiles[4].mean_abs_bps;
  }
  if (groups[0].size() >= 2 && groups[4].size() >= 2) t.q1_vs_q5 = welch_t(groups[0], groups[4]);

  t.tail_threshold = percentile(s.h, opt.tail_pct);
  std::vector<double> tail;
  std::vector<double> rest;
  for (std::size_t i = 0; i < t.n; ++i) {
    (s.h[i] < t.tail_threshold ? tail : rest).push_back(s.abs_ret_bps[i]);
  }
  t.tail_n = tail.size();
  if (!tail.empty()) {
    t.tail_mean_bps = moments(tail).mean;
    if (t.unconditional_mean_bps > 0.0) t.tail_ratio = t.tail_mean_bps / t.unconditional_mean_bps;
  }
  if (tail.size() >= 2 && rest.size() >= 2) t.tail_vs_rest = welch_t(tail, rest);

  // Moving-block bootstrap of the Q1/Q5 ratio; forward returns overlap at
  // second resolution, so i.i.d. resampling would understate the error.
  if (opt.block_reps > 1 && t.n > opt.block_len) {
    const std::size_t nblocks = (t.n + opt.block_len - 1) / opt.block_len;
    std::vector<double> ratios;
    std::vector<double> a;
    std::vector<std::uint8_t> qq;
    for (int rep = 0; rep < opt.block_reps; ++rep) {
      auto rng = make_stream(opt.seed, static_cast<std::uint64_t>(rep), 0xb10c);
      a.clear();
      qq.clear();
      for (std::size_t b = 0; b < nblocks; ++b) {
        const std::size_t start = uniform_index(rng, t.n - opt.block_len + 1);
        for (std::size_t i = start; i < start + opt.block_len; ++i) {
          a.push_back(s.abs_ret_bps[i]);
          qq.push_back(q[i]);
        }
      }
      const double r = q1_q5_ratio(a, qq);
      if (std::isfinite(r)) ratios.push_back(r);
    }
    if (ratios.size() > 1) t.ratio_block_se = std::sqrt(moments(ratios).var);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Placebos

struct PlaceboResult {
  std::string name;
  int trials = 0;
  double observed = 0.0;
  double null_mean = 0.0;
  double null_sd = 0.0;
  double z = std::numeric_limits<double>::quiet_NaN();
  double empirical_p = 1.0;  // share of null draws >= observed (with +1 smoothing)
  bool defined = false;
  std::vector<double> null_values;
};

inline constexpr double kDegenerateSd = 1e-12;

inline double placebo_z(double observed, double null_mean, double null_sd) {
  return (observed - null_mean) / null_sd;
}

inline PlaceboResult summarize_null(std::string name, double observed, std::vector<double> null) {
  PlaceboResult r;
  r.name = std::move(name);
  r.trials = static_cast<int>(null.size());
  r.observed = observed;
  std::vector<double> finite;
  for (double v : null) {
    if (std::isfinite(v)) finite.push_back(v);
  }
  if (finite.size() >= 2) {
    const auto m = moments(finite);
    r.null_mean = m.mean;
    r.null_sd = std::sqrt(m.var);
    std::size_t ge = 0;
    for (double v : finite) ge += v >= observed;
    r.empirical_p = static_cast<double>(ge + 1) / static_cast<double>(finite.size() + 1);
    if (r.null_sd >= kDegenerateSd && std::isfinite(observed)) {
      r.z = placebo_z(observed, r.null_mean, r.null_sd);
      r.defined = true;
    }
  }
  r.null_values = std::move(null);
  return r;
}

struct PlaceboOptions {
  int trials = 1000;
  std::uint64_t seed = 7;
  unsigned workers = 1;
};

// Shuffles forward returns against the (fixed) entropy quintiles.
inline PlaceboResult placebo_label_permutation(const MagnitudeSample& s, const PlaceboOptions& opt) {
  const auto q = entropy_quintiles(s.h);
  const double observed = q1_q5_ratio(s.abs_ret_bps, q);
  std::vector<double> null(static_cast<std::size_t>(opt.trials));
  parallel_for(null.size(), opt.workers, [&](std::size_t trial) {
    auto rng = make_stream(opt.seed, trial, 0x1abe1);
    std::vector<double> shuffled = s.abs_ret_bps;
    shuffle(std::span<double>(shuffled), rng);
    null[trial] = q1_q5_ratio(shuffled, q);
  });
  return summarize_null("label_permutation", observed, std::move(null));
}

// Q1/Q5 ratio with the entropy series circularly shifted by `offset` points.
inline double shifted_ratio(std::span<const double> abs_ret, std::span<const std::uint8_t> q,
                            std::size_t offset) {
  const std::size_t n = abs_ret.size();
  double s1 = 0.0;
  double s5 = 0.0;
  std::size_t n1 = 0;
  std::size_t n5 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto g = q[(i + offset) % n];
    if (g == 0) {
      s1 += abs_ret[i];
      ++n1;
    } else if (g == 4) {
      s5 += abs_ret[i];
      ++n5;
    }
  }
  if (n1 == 0 || n5 == 0 || s5 == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (s1 / static_cast<double>(n1)) / (s5 / static_cast<double>(n5));
}

// Random non-zero circular offsets of the entropy series against returns:
// each series keeps its own autocorrelation while the alignment is broken.
inline PlaceboResult placebo_temporal_scramble(const MagnitudeSample& s, const PlaceboOptions& opt) {
  const auto q = entropy_quintiles(s.h);
  const double observed = q1_q5_ratio(s.abs_ret_bps, q);
  const std::size_t n = s.size();
  std::vector<double> null(static_cast<std::size_t>(opt.trials),
                           std::numeric_limits<double>::quiet_NaN());
  // A constant entropy series carries no alignment to break.
  const bool constant = std::adjacent_find(s.h.begin(), s.h.end(), std::not_equal_to<>()) == s.h.end();
  if (n >= 2 && !constant) {
    parallel_for(null.size(), opt.workers, [&](std::size_t trial) {
      auto rng = make_stream(opt.seed, trial, 0x5c4a);
      const std::size_t offset = 1 + uniform_index(rng, n - 1);
      null[trial] = shifted_ratio(s.abs_ret_bps, q, offset);
    });
  }
  auto r = summarize_null("temporal_scramble", observed, std::move(null));
  if (constant) {
    r.defined = false;
    r.z = std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

// Test-period data shared by the execution placebos: sessions with the
// take-profit each session's fold calibrated.
struct ExecutionContext {
  std::span<const SessionData> sessions;
  std::vector<double> take_profit_bps;  // per session
  ExitRule rule;
  CostModel costs;
};

// Gross PnL of a trade decided at bar k of session s in each direction; index 0 is
// short, 1 is long. Entry is at bar k + 1.
struct OutcomeTable {
  std::vector<std::size_t> session_offset;
  std::vector<std::array<double, 2>> gross_bps;

  std::size_t size() const { return gross_bps.size(); }
};

inline OutcomeTable tabulate_outcomes(const ExecutionContext& ctx) {
  OutcomeTable t;
  for (std::size_t s = 0; s < ctx.sessions.size(); ++s) {
    t.session_offset.push_back(t.gross_bps.size());
    const auto& bars = ctx.sessions[s].bars;
    ExitRule use = ctx.rule;
    use.take_profit_bps = ctx.take_profit_bps[s];
    for (std::size_t k = 0; tradable(k, bars.size()); ++k) {
      t.gross_bps.push_back({simulate_exit(bars, k + 1, -1, use, ctx.costs).gross_bps,
                             simulate_exit(bars, k + 1, +1, use, ctx.costs).gross_bps});
    }
  }
  return t;
}

// n_trades entries drawn uniformly without replacement from all tradable
// seconds, coin-flip directions, identical exits and costs.
inline PlaceboResult placebo_random_entry(const OutcomeTable& table, std::int64_t n_trades,
                                          double observed_pnl, double round_trip_bps,
                                          const PlaceboOptions& opt) {
  if (n_trades < 0 || static_cast<std::size_t>(n_trades) > table.size()) {
    throw ProtocolError("random-entry placebo: " + std::to_string(n_trades) + " trades but only " +
                        std::to_string(table.size()) + " valid entry seconds");
  }
  std::vector<double> null(static_cast<std::size_t>(opt.trials));
  const unsigned workers = std::max(1u, std::min<unsigned>(opt.workers, static_cast<unsigned>(null.size())));
  std::vector<std::vector<std::uint32_t>> stamps(workers);
  parallel_for(workers, workers, [&](std::size_t w) {
    auto& stamp = stamps[w];
    stamp.assign(table.size(), 0);
    std::uint32_t mark = 0;
    for (std::size_t trial = w; trial < null.size(); trial += workers) {
      ++mark;
      auto rng = make_stream(opt.seed, trial, 0x4a4d);
      double gross = 0.0;
      for (std::int64_t i = 0; i < n_trades; ++i) {
        std::size_t idx;
        do {
          idx = uniform_index(rng, table.size());
        } while (stamp[idx] == mark);
        stamp[idx] = mark;
        const int dir = static_cast<int>(rng() >> 63);
        gross += table.gross_bps[idx][dir];
      }
      null[trial] = gross - round_trip_bps * static_cast<double>(n_trades);
    }
  });
  return summarize_null("random_entry", observed_pnl, std::move(null));
}

// ---------------------------------------------------------------------------
// Attribution

struct Attribution {
  double observed_bps = 0.0;
  double random_entry_mean_bps = 0.0;     // payoff structure alone
  double direction_neutral_bps = 0.0;     // strategy times, coin-flip directions (expectation)
  double direction_mc_mean_bps = 0.0;     // same, Monte Carlo estimate
  double direction_mc_sd_bps = 0.0;
  double timing_share = std::numeric_limits<double>::quiet_NaN();
  double payoff_share = std::numeric_limits<double>::quiet_NaN();
  double direction_share = std::numeric_limits<double>::quiet_NaN();
  bool defined = false;
};

// Expected PnL at the strategy's entry bars with each direction equally
// likely, computed exactly from both outcomes, plus a coin-flip Monte Carlo.
struct DirectionNeutral {
  double expected_bps = 0.0;
  double mc_mean_bps = 0.0;
  double mc_sd_bps = 0.0;
};

inline DirectionNeutral direction_randomized(const ExecutionContext& ctx,
                                             std::span<const EntryRequest> entries,
                                             const PlaceboOptions& opt) {
  std::vector<std::array<double, 2>> pnl;
  for (const auto& e : entries) {
    const auto& bars = ctx.sessions[e.session].bars;
    if (!tradable(e.bar_index, bars.size())) continue;
    ExitRule use = ctx.rule;
    use.take_profit_bps = ctx.take_profit_bps[e.session];
    pnl.push_back({simulate_exit(bars, e.bar_index + 1, -1, use, ctx.costs).net_bps,
                   simulate_exit(bars, e.bar_index + 1, +1, use, ctx.costs).net_bps});
  }
  DirectionNeutral d;
  for (const auto& p : pnl) d.expected_bps += 0.5 * (p[0] + p[1]);
  std::vector<double> totals(static_cast<std::size_t>(opt.trials));
  parallel_for(totals.size(), opt.workers, [&](std::size_t trial) {
    auto rng = make_stream(opt.seed, trial, 0xd1ec);
    double total = 0.0;
    for (const auto& p : pnl) total += p[static_cast<std::size_t>(rng() >> 63)];
    totals[trial] = total;
  });
  if (!totals.empty()) {
    const auto m = moments(totals);
    d.mc_mean_bps = m.mean;
    d.mc_sd_bps = std::sqrt(m.var);
  }
  return d;
}

// observed = payoff (random entry) + timing (strategy times, neutral
// direction, minus random entry) + direction (observed minus neutral).
inline Attribution attribute_profit(double observed_bps, double random_entry_mean_bps,
                                    const DirectionNeutral& neutral) {
  Attribution a;
  a.observed_bps = observed_bps;
  a.random_entry_mean_bps = random_entry_mean_bps;
  a.direction_neutral_bps = neutral.expected_bps;
  a.direction_mc_mean_bps = neutral.mc_mean_bps;
  a.direction_mc_sd_bps = neutral.mc_sd_bps;
  if (observed_bps <= 0.0) return a;
  a.payoff_share = random_entry_mean_bps / observed_bps;
  a.timing_share = (neutral.expected_bps - random_entry_mean_bps) / observed_bps;
  a.direction_share = (observed_bps - neutral.expected_bps) / observed_bps;
  a.defined = true;
  return a;
}

// ---------------------------------------------------------------------------
// Walk-forward

struct StrategyConfig {
  SignalConfig signal;
  ExitRule exit;
  CostModel costs;
};

struct FoldResult {
  int index = 0;  // 1-based
  Fold fold;
  Thresholds thresholds;
  std::vector<SignalEvent> signals;
  BacktestResult result;
  MagnitudeTable magnitude;
  BinomialResult direction;
};

struct WalkForwardResult {
  std::vector<FoldResult> folds;
  BacktestResult pooled;
  BinomialResult pooled_direction;
  // Pooled signals with session indices into the full session list.
  std::vector<SignalEvent> pooled_signals;
  std::vector<double> take_profit_by_session;  // NaN outside test blocks
};

inline WalkForwardResult walk_forward(std::span<const SessionData> sessions, const FoldSpec& spec,
                                      const StrategyConfig& cfg,
                                      const MagnitudeOptions& mag = {}, unsigned workers = 1,
                                      bool with_magnitude = true) {
  const auto folds = make_folds(sessions.size(), spec);
  WalkForwardResult out;
  out.folds.resize(folds.size());
  parallel_for(folds.size(), workers, [&](std::size_t k) {
    const Fold& f = folds[k];
    audit_fold(sessions, f);
    auto train = sessions.subspan(f.train_begin, f.train_end - f.train_begin);
    auto test = sessions.subspan(f.test_begin, f.test_end - f.test_begin);
    FoldResult& fr = out.folds[k];
    fr.index = static_cast<int>(k) + 1;
    fr.fold = f;
    fr.thresholds = calibrate(train, cfg.signal, cfg.exit, cfg.costs);
    if (!test.empty() && !test.front().bars.empty() &&
        !(fr.thresholds.train_end_s < test.front().bars.front().ts_s)) {
      throw ProtocolError("thresholds calibrated on data that overlaps the test window");
    }
    fr.signals = generate_signals(test, fr.thresholds, cfg.signal);
    fr.result = run_backtest(test, fr.signals, fr.thresholds, cfg.exit, cfg.costs);
    if (fr.result.n > 0) fr.direction = binomial_direction(fr.result.wins, fr.result.n);
    if (with_magnitude) fr.magnitude = magnitude_stats(collect_magnitude_sample(test), mag);
    for (auto& s : fr.signals) s.session += f.test_begin;
  });
  std::vector<BacktestResult> results;
  out.take_profit_by_session.assign(sessions.size(), std::numeric_limits<double>::quiet_NaN());
  for (const auto& fr : out.folds) {
    results.push_back(fr.result);
    out.pooled_signals.insert(out.pooled_signals.end(), fr.signals.begin(), fr.signals.end());
    for (std::size_t i = fr.fold.test_begin; i < fr.fold.test_end; ++i) {
      out.take_profit_by_session[i] = fr.thresholds.take_profit_bps;
    }
  }
  out.pooled = pool_folds(results);
  if (out.pooled.n > 0) out.pooled_direction = binomial_direction(out.pooled.wins, out.pooled.n);
  return out;
}

// ---------------------------------------------------------------------------
// Sensitivity

struct SensitivityRow {
  std::string param;
  double level = 0.0;  // relative perturbation, e.g. -0.5
  double value = 0.0;  // parameter value used
  bool valid = true;
  std::string note;
  double total_net_bps = 0.0;
  std::int64_t n_trades = 0;
  double pct_change = 0.0;
};

inline const std::vector<double>& sensitivity_levels() {
  static const std::vector<double> levels{-0.5, -0.25, 0.0, 0.25, 0.5};
  return levels;
}

// One-at-a-time perturbation of the entropy percentile, the volume
// percentile's upper-tail mass, stop_bps and timeout_s; 4 x 5 = 20 runs of
// the full walk-forward protocol.
inline std::vector<SensitivityRow> sensitivity_sweep(std::span<const SessionData> sessions,
                                                     const FoldSpec& spec,
                                                     const StrategyConfig& base,
                                                     unsigned workers = 1) {
  const char* params[] = {"entropy_pct", "volume_pct", "stop_bps", "timeout_s"};
  std::vector<SensitivityRow> rows;
  std::vector<StrategyConfig> configs;
  for (const char* p : params) {
    for (double lvl : sensitivity_levels()) {
      StrategyConfig c = base;
      SensitivityRow row;
      row.param = p;
      row.level = lvl;
      const std::string name = p;
      if (name == "entropy_pct") {
        c.signal.entropy_pct = base.signal.entropy_pct * (1.0 + lvl);
        row.value = c.signal.entropy_pct;
      } else if (name == "volume_pct") {
        c.signal.volume_pct = 1.0 - (1.0 - base.signal.volume_pct) * (1.0 + lvl);
        row.value = c.signal.volume_pct;
      } else if (name == "stop_bps") {
        c.exit.stop_bps = base.exit.stop_bps * (1.0 + lvl);
        row.value = c.exit.stop_bps;
      } else {
        c.exit.timeout_s = static_cast<std::int64_t>(
            std::llround(static_cast<double>(base.exit.timeout_s) * (1.0 + lvl)));
        row.value = static_cast<double>(c.exit.timeout_s);
      }
      try {
        c.signal.validate();
        c.exit.validate();
      } catch (const InputError& e) {
        row.valid = false;
        row.note = e.what();
      }
      rows.push_back(row);
      configs.push_back(c);
    }
  }
  parallel_for(rows.size(), workers, [&](std::size_t i) {
    if (!rows[i].valid) return;
    try {
      const auto wf = walk_forward(sessions, spec, configs[i], {}, 1, false);
      rows[i].total_net_bps = wf.pooled.total_net_bps;
      rows[i].n_trades = wf.pooled.n;
    } catch (const ProtocolError& e) {
      rows[i].valid = false;
      rows[i].note = e.what();
    }
  });
  double baseline = 0.0;
  for (const auto& r : rows) {
    if (r.level == 0.0 && r.valid) {
      baseline = r.total_net_bps;
      break;
    }
  }
  for (auto& r : rows) {
    r.pct_change = baseline != 0.0 ? (r.total_net_bps - baseline) / std::abs(baseline) : 0.0;
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Report

struct StatReport {
  MagnitudeTable magnitude;  // all sessions
  double magnitude_ratio = 0.0;
  double welch_t = 0.0;
  double welch_p = 1.0;
  std::int64_t direction_k = 0;
  std::int64_t direction_n = 0;
  double binom_z = 0.0;
  double binom_p = 1.0;
  double binom_exact_p = 1.0;
  std::map<std::string, PlaceboResult> placebos;
  Attribution attribution;
  int bonferroni_tests = 14;
  double bonferroni_alpha = 0.05 / 14.0;
};

}  // namespace ofe
