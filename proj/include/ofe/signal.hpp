#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ofe/backtest.hpp"
#include "ofe/common.hpp"
#include "ofe/dataset.hpp"

namespace ofe {

struct SignalConfig {
  double entropy_pct = 0.05;
  double volume_pct = 0.95;
  double ret_min_bps = 5.0;
  double ret_max_bps = 20.0;
  std::int64_t lookback_s = 300;
  // false: band applies to |trailing return|; true: to the signed return.
  bool signed_band = false;
  std::vector<double> take_profit_grid{10.0, 15.0, 20.0, 25.0, 30.0};
  std::size_t min_training_points = 1000;

  void validate() const {
    if (!(entropy_pct > 0.0 && entropy_pct < 1.0)) throw InputError("entropy_pct must be in (0,1)");
    if (!(volume_pct > 0.0 && volume_pct < 1.0)) throw InputError("volume_pct must be in (0,1)");
    if (!(ret_min_bps < ret_max_bps)) throw InputError("ret_min_bps must be < ret_max_bps");
    if (lookback_s < 1) throw InputError("lookback_s must be >= 1");
    if (take_profit_grid.empty()) throw InputError("take_profit_grid is empty");
    for (double tp : take_profit_grid) {
      if (!(tp > 0.0)) throw InputError("take-profit grid values must be positive");
    }
  }
};

struct Thresholds {
  double h_lo = 0.0;
  std::int64_t vol_hi = 0;
  double ret_min_bps = 5.0;
  double ret_max_bps = 20.0;
  double take_profit_bps = 20.0;
  // Calibration audit trail.
  std::int64_t train_end_s = 0;
  std::size_t train_points = 0;
  std::size_t train_bars = 0;
  std::vector<double> grid_pnl_bps;
  std::vector<std::string> warnings;
};

struct SignalEvent {
  std::size_t session = 0;
  std::size_t bar_index = 0;
  std::int64_t ts_s = 0;
  double h = 0.0;
  double trailing_ret_bps = 0.0;
  std::int64_t volume = 0;
  int direction_hint = 0;

  bool operator==(const SignalEvent&) const = default;
};

// log(P_t / P_{t - lookback}) in bps, with the reference taken from the last
// bar at or before t - lookback in the same session.
inline std::optional<double> trailing_return_bps(std::span<const SecondBar> bars,
                                                 std::size_t index, std::int64_t lookback_s) {
  const auto ref = bar_at_or_before(bars.first(index + 1), bars[index].ts_s - lookback_s);
  if (ref < 0) return std::nullopt;
  return log_return_bps(bars[static_cast<std::size_t>(ref)].close, bars[index].close);
}

// The three entry predicates, evaluated independently of the scan in
// generate_signals so callers can re-check emitted events.
inline bool passes_thresholds(double h, std::int64_t volume, double ret_bps, const Thresholds& th,
                              bool signed_band) {
  const double band_value = signed_band ? ret_bps : std::abs(ret_bps);
  return h < th.h_lo && volume > th.vol_hi && band_value >= th.ret_min_bps &&
         band_value <= th.ret_max_bps && ret_bps != 0.0;
}

inline std::vector<SignalEvent> generate_signals(std::span<const SessionData> sessions,
                                                 const Thresholds& th, const SignalConfig& cfg) {
  std::vector<SignalEvent> out;
  for (std::size_t s = 0; s < sessions.size(); ++s) {
    const auto& sd = sessions[s];
    for (std::size_t k = 1; k < sd.bars.size(); ++k) {
      const EntropyPoint* e = sd.entropy_at_bar(k);
      if (!e || !e->defined || !(e->h < th.h_lo)) continue;
      if (sd.bars[k].volume <= th.vol_hi) continue;
      const auto ret = trailing_return_bps(sd.bars, k, cfg.lookback_s);
      if (!ret) continue;
      if (!passes_thresholds(e->h, sd.bars[k].volume, *ret, th, cfg.signed_band)) continue;
      out.push_back({s, k, sd.bars[k].ts_s, e->h, *ret, sd.bars[k].volume, sign_of(*ret)});
    }
  }
  return out;
}

inline std::vector<EntryRequest> to_entries(std::span<const SignalEvent> signals) {
  std::vector<EntryRequest> out;
  out.reserve(signals.size());
  for (const auto& s : signals) out.push_back({s.session, s.bar_index, s.ts_s, s.direction_hint});
  return out;
}

inline BacktestResult run_backtest(std::span<const SessionData> sessions,
                                   std::span<const SignalEvent> signals, const Thresholds& th,
                                   const ExitRule& rule, const CostModel& costs) {
  ExitRule use = rule;
  use.take_profit_bps = th.take_profit_bps;
  const auto entries = to_entries(signals);
  auto r = run_entries(sessions, entries, use, costs);
  if (!sessions.empty()) {
    r.window_start_s = sessions.front().session.open_s;
    r.window_end_s = sessions.back().session.close_s;
  }
  return r;
}

// Percentile thresholds on defined training points, then a take-profit grid
// search maximizing in-sample net PnL (smallest value on ties).
inline Thresholds calibrate(std::span<const SessionData> train, const SignalConfig& cfg,
                            const ExitRule& rule, const CostModel& costs) {
  cfg.validate();
  std::vector<double> hs;
  std::vector<double> vols;
  std::int64_t train_end = INT64_MIN;
  for (const auto& sd : train) {
    for (const auto& e : sd.entropy) {
      if (e.defined) hs.push_back(e.h);
    }
    for (const auto& b : sd.bars) {
      vols.push_back(static_cast<double>(b.volume));
      train_end = std::max(train_end, b.ts_s);
    }
  }
  if (hs.size() < cfg.min_training_points) {
    throw ProtocolError("insufficient training data: " + std::to_string(hs.size()) +
                        " defined entropy points (need " +
                        std::to_string(cfg.min_training_points) + ")");
  }
  Thresholds th;
  th.ret_min_bps = cfg.ret_min_bps;
  th.ret_max_bps = cfg.ret_max_bps;
  th.train_points = hs.size();
  th.train_bars = vols.size();
  th.train_end_s = train_end;
  th.h_lo = percentile(std::move(hs), cfg.entropy_pct);
  // Volumes are integers, so v > x is the same predicate as v > floor(x).
  std::sort(vols.begin(), vols.end());
  th.vol_hi = static_cast<std::int64_t>(std::floor(percentile_sorted(vols, cfg.volume_pct)));
  if (static_cast<double>(th.vol_hi) >= vols.back()) {
    th.warnings.push_back("volume threshold equals the training maximum; volume condition cannot fire");
  }

  const auto signals = generate_signals(train, th, cfg);
  double best = -std::numeric_limits<double>::infinity();
  for (double tp : cfg.take_profit_grid) {
    th.take_profit_bps = tp;
    const double pnl = run_backtest(train, signals, th, rule, costs).total_net_bps;
    th.grid_pnl_bps.push_back(pnl);
    if (pnl > best) best = pnl;
  }
  th.take_profit_bps = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cfg.take_profit_grid.size(); ++i) {
    if (th.grid_pnl_bps[i] == best && cfg.take_profit_grid[i] < th.take_profit_bps) {
      th.take_profit_bps = cfg.take_profit_grid[i];
    }
  }
  return th;
}

inline void write_signals_csv(std::ostream& out, std::span<const SignalEvent> signals) {
  out << "ts_s,h,trailing_ret_bps,volume,direction_hint\n";
  std::string buf;
  char tmp[64];
  auto num = [&](double v) {
    auto [e, ec] = std::to_chars(tmp, tmp + sizeof tmp, v);
    buf.append(tmp, e);
  };
  for (const auto& s : signals) {
    buf.clear();
    detail::append_int(buf, s.ts_s);
    buf.push_back(',');
    num(s.h);
    buf.push_back(',');
    num(s.trailing_ret_bps);
    buf.push_back(',');
    detail::append_int(buf, s.volume);
    buf.push_back(',');
    detail::append_int(buf, s.direction_hint);
    buf.push_back('\n');
    out << buf;
  }
}

}  // namespace ofe
