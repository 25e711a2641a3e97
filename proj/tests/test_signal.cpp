#include <gtest/gtest.h>

#include <algorithm>

#include "ofe/signal.hpp"

using namespace ofe;

namespace {

std::vector<SessionData> random_sessions(std::size_t days, std::size_t bars_per_day, std::uint64_t seed) {
  std::vector<SessionData> out;
  for (std::size_t d = 0; d < days; ++d) {
    auto rng = make_stream(seed, d, 3);
    std::vector<SecondBar> bars;
    const std::int64_t open = 1'700'000'000 + static_cast<std::int64_t>(d) * 86'400;
    std::int64_t t = open;
    double px = 200.0;
    for (std::size_t i = 0; i < bars_per_day; ++i) {
      px *= std::exp(1.5e-4 * standard_normal(rng));
      const std::int64_t v = uniform01(rng) < 0.05 ? 400 + static_cast<std::int64_t>(uniform_index(rng, 600))
                                                   : 1 + static_cast<std::int64_t>(uniform_index(rng, 100));
      bars.push_back({t, px, v});
      t += 1 + static_cast<std::int64_t>(uniform_index(rng, 2));
    }
    SessionSpec spec{{2025, 10, static_cast<int>(1 + d)}, open, t};
    out.push_back(build_session(spec, std::move(bars), EntropyConfig{}));
  }
  return out;
}

// Reference by linear search for the reference bar.
std::optional<double> trailing_direct(const std::vector<SecondBar>& bars, std::size_t k, std::int64_t lb) {
  std::optional<std::size_t> ref;
  for (std::size_t i = 0; i <= k; ++i) {
    if (bars[i].ts_s <= bars[k].ts_s - lb) ref = i;
  }
  if (!ref) return std::nullopt;
  return 1e4 * std::log(bars[k].close / bars[*ref].close);
}

double interp_percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(pos);
  if (i + 1 >= v.size()) return v.back();
  return v[i] + (pos - static_cast<double>(i)) * (v[i + 1] - v[i]);
}

}  // namespace

TEST(Signal, PredicateBoundaries) {
  Thresholds th;
  th.h_lo = 0.5;
  th.vol_hi = 100;
  EXPECT_TRUE(passes_thresholds(0.49, 101, 5.0, th, false));
  EXPECT_TRUE(passes_thresholds(0.49, 101, -20.0, th, false));
  EXPECT_FALSE(passes_thresholds(0.5, 101, 10.0, th, false));
  EXPECT_FALSE(passes_thresholds(0.49, 100, 10.0, th, false));
  EXPECT_FALSE(passes_thresholds(0.49, 101, 4.99, th, false));
  EXPECT_FALSE(passes_thresholds(0.49, 101, 20.01, th, false));
  EXPECT_FALSE(passes_thresholds(0.49, 101, -10.0, th, true));
  EXPECT_TRUE(passes_thresholds(0.49, 101, 10.0, th, true));
}

TEST(Signal, TrailingReturnUsesLastBarAtOrBefore) {
  std::vector<SecondBar> bars{{0, 100.0, 1}, {5, 101.0, 1}, {9, 102.0, 1}, {12, 103.0, 1}};
  EXPECT_FALSE(trailing_return_bps(bars, 1, 10).has_value());
  EXPECT_NEAR(*trailing_return_bps(bars, 3, 10), 1e4 * std::log(103.0 / 100.0), 1e-9);
  EXPECT_NEAR(*trailing_return_bps(bars, 3, 7), 1e4 * std::log(103.0 / 101.0), 1e-9);
  EXPECT_NEAR(*trailing_return_bps(bars, 2, 4), 1e4 * std::log(102.0 / 101.0), 1e-9);
}

TEST(Signal, GenerateMatchesBruteForce) {
  const auto sessions = random_sessions(2, 4000, 5);
  Thresholds th;
  std::vector<double> hs;
  for (const auto& s : sessions) {
    for (const auto& e : s.entropy) {
      if (e.defined) hs.push_back(e.h);
    }
  }
  th.h_lo = interp_percentile(hs, 0.3);
  th.vol_hi = 80;
  const SignalConfig cfg;
  const auto sig = generate_signals(sessions, th, cfg);
  std::size_t expect = 0;
  std::size_t j = 0;
  for (std::size_t s = 0; s < sessions.size(); ++s) {
    const auto& sd = sessions[s];
    for (std::size_t k = 1; k < sd.bars.size(); ++k) {
      const auto& e = sd.entropy[k - 1];
      const auto ret = trailing_direct(sd.bars, k, cfg.lookback_s);
      const bool fire = e.defined && e.h < th.h_lo && sd.bars[k].volume > th.vol_hi && ret &&
                        std::abs(*ret) >= 5.0 && std::abs(*ret) <= 20.0;
      if (!fire) continue;
      ++expect;
      ASSERT_LT(j, sig.size());
      EXPECT_EQ(sig[j].session, s);
      EXPECT_EQ(sig[j].bar_index, k);
      EXPECT_EQ(sig[j].direction_hint, *ret > 0 ? 1 : -1);
      EXPECT_NEAR(sig[j].trailing_ret_bps, *ret, 1e-9);
      ++j;
    }
  }
  EXPECT_EQ(sig.size(), expect);
  EXPECT_GT(expect, 0u);
}

TEST(Signal, CalibrationThresholdsAndGrid) {
  const auto train = random_sessions(3, 5000, 9);
  const SignalConfig cfg;
  const ExitRule rule;
  const CostModel costs;
  const auto th = calibrate(train, cfg, rule, costs);

  std::vector<double> hs;
  std::vector<double> vols;
  for (const auto& s : train) {
    for (const auto& e : s.entropy) {
      if (e.defined) hs.push_back(e.h);
    }
    for (const auto& b : s.bars) vols.push_back(static_cast<double>(b.volume));
  }
  EXPECT_DOUBLE_EQ(th.h_lo, interp_percentile(hs, 0.05));
  EXPECT_EQ(th.vol_hi, static_cast<std::int64_t>(std::floor(interp_percentile(vols, 0.95))));
  EXPECT_EQ(th.train_end_s, train.back().bars.back().ts_s);

  ASSERT_EQ(th.grid_pnl_bps.size(), cfg.take_profit_grid.size());
  const auto best = std::max_element(th.grid_pnl_bps.begin(), th.grid_pnl_bps.end());
  EXPECT_EQ(th.take_profit_bps, cfg.take_profit_grid[static_cast<std::size_t>(best - th.grid_pnl_bps.begin())]);
  // Each grid entry is the in-sample net PnL at that take-profit.
  const auto sig = generate_signals(train, th, cfg);
  for (std::size_t i = 0; i < cfg.take_profit_grid.size(); ++i) {
    Thresholds t2 = th;
    t2.take_profit_bps = cfg.take_profit_grid[i];
    EXPECT_DOUBLE_EQ(run_backtest(train, sig, t2, rule, costs).total_net_bps, th.grid_pnl_bps[i]);
  }

  const auto again = calibrate(train, cfg, rule, costs);
  EXPECT_EQ(again.h_lo, th.h_lo);
  EXPECT_EQ(again.vol_hi, th.vol_hi);
  EXPECT_EQ(again.grid_pnl_bps, th.grid_pnl_bps);
}

TEST(Signal, TiesPickSmallestTakeProfit) {
  // No signals can fire: every grid value scores zero.
  const auto train = random_sessions(1, 3000, 2);
  SignalConfig cfg;
  cfg.ret_min_bps = 1e6;
  cfg.ret_max_bps = 2e6;
  cfg.take_profit_grid = {30.0, 10.0, 20.0};
  const auto th = calibrate(train, cfg, ExitRule{}, CostModel{});
  EXPECT_EQ(th.take_profit_bps, 10.0);
}

TEST(Signal, InsufficientTrainingDataIsProtocolError) {
  const auto train = random_sessions(1, 200, 2);
  EXPECT_THROW(calibrate(train, SignalConfig{}, ExitRule{}, CostModel{}), ProtocolError);
  SignalConfig bad;
  bad.entropy_pct = 1.5;
  EXPECT_THROW(bad.validate(), InputError);
}
