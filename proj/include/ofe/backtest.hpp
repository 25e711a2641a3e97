#pragma once

// Event-driven execution of the low-entropy trading rule: next-bar entries,
// stop-loss / take-profit / timeout / session-close exits on bar closes, and
// a fixed round-trip cost.

#include <cmath>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ofe/common.hpp"
#include "ofe/dataset.hpp"

namespace ofe {

struct CostModel {
  double half_spread_bps = 0.085;
  double slippage_bps = 0.30;
  double fees_bps = 0.10;

  double round_trip_bps() const { return 2.0 * half_spread_bps + slippage_bps + fees_bps; }
};

struct ExitRule {
  double stop_bps = 5.0;
  std::int64_t timeout_s = 300;
  double take_profit_bps = 20.0;

  void validate() const {
    if (!(stop_bps > 0.0)) throw InputError("stop_bps must be positive");
    if (timeout_s < 1) throw InputError("timeout_s must be >= 1");
    if (!(take_profit_bps > 0.0)) throw InputError("take_profit_bps must be positive");
  }
};

enum class ExitReason { stop, timeout, take_profit, session_close };

inline std::string_view to_string(ExitReason r) {
  switch (r) {
    case ExitReason::stop: return "stop";
    case ExitReason::timeout: return "timeout";
    case ExitReason::take_profit: return "take_profit";
    case ExitReason::session_close: return "session_close";
  }
  return "?";
}

struct Trade {
  std::int64_t entry_ts = 0;
  std::int64_t exit_ts = 0;
  int direction = 0;
  double entry_px = 0.0;
  double exit_px = 0.0;
  ExitReason exit_reason = ExitReason::timeout;
  double gross_bps = 0.0;
  double net_bps = 0.0;

  bool operator==(const Trade&) const = default;
};

struct BacktestResult {
  std::vector<Trade> trades;
  std::int64_t n = 0;
  std::int64_t wins = 0;
  double total_gross_bps = 0.0;
  double total_net_bps = 0.0;
  double win_rate = 0.0;
  std::int64_t skipped_no_next_bar = 0;
  std::int64_t ignored_while_open = 0;
  // Test window covered by this result, [window_start_s, window_end_s).
  std::int64_t window_start_s = 0;
  std::int64_t window_end_s = 0;

  void recompute(double round_trip_bps) {
    n = static_cast<std::int64_t>(trades.size());
    wins = 0;
    total_gross_bps = 0.0;
    for (const auto& t : trades) {
      total_gross_bps += t.gross_bps;
      wins += t.net_bps > 0.0;
    }
    total_net_bps = total_gross_bps - round_trip_bps * static_cast<double>(n);
    win_rate = n ? static_cast<double>(wins) / static_cast<double>(n) : 0.0;
  }
};

// Walks forward from the entry bar until an exit condition fires. Stops are
// checked before take-profits; the session's last bar forces an exit.
inline Trade simulate_exit(std::span<const SecondBar> bars, std::size_t entry_index, int direction,
                           const ExitRule& rule, const CostModel& costs) {
  Trade t;
  const SecondBar& entry = bars[entry_index];
  t.entry_ts = entry.ts_s;
  t.entry_px = entry.close;
  t.direction = direction;
  std::size_t k = entry_index + 1;
  for (; k < bars.size(); ++k) {
    const double move = direction * log_return_bps(entry.close, bars[k].close);
    if (move <= -rule.stop_bps) {
      t.exit_reason = ExitReason::stop;
      break;
    }
    if (move >= rule.take_profit_bps) {
      t.exit_reason = ExitReason::take_profit;
      break;
    }
    if (bars[k].ts_s - entry.ts_s >= rule.timeout_s) {
      t.exit_reason = ExitReason::timeout;
      break;
    }
    if (k + 1 == bars.size()) {
      t.exit_reason = ExitReason::session_close;
      break;
    }
  }
  // Entry on the final bar: flat at the same close.
  if (k >= bars.size()) {
    k = bars.size() - 1;
    t.exit_reason = ExitReason::session_close;
  }
  t.exit_ts = bars[k].ts_s;
  t.exit_px = bars[k].close;
  t.gross_bps = direction * log_return_bps(t.entry_px, t.exit_px);
  t.net_bps = t.gross_bps - costs.round_trip_bps();
  return t;
}

// A decision at bar k fills at k + 1 and needs at least one later bar to exit.
inline bool tradable(std::size_t decision_index, std::size_t n_bars) {
  return decision_index + 2 < n_bars;
}

// An entry request: the bar at which the decision is made (fill is at the
// following bar) and a direction.
struct EntryRequest {
  std::size_t session = 0;
  std::size_t bar_index = 0;
  std::int64_t ts_s = 0;
  int direction = 0;
};

// Single-position event loop over time-ordered requests. A request that is
// not tradable is counted and skipped; requests at or before the
// open trade's exit are ignored.
inline BacktestResult run_entries(std::span<const SessionData> sessions,
                                  std::span<const EntryRequest> requests, const ExitRule& rule,
                                  const CostModel& costs,
                                  std::span<const double> take_profit_by_session = {}) {
  BacktestResult r;
  std::int64_t busy_until = INT64_MIN;
  std::size_t busy_session = SIZE_MAX;
  for (const auto& req : requests) {
    if (req.direction == 0) continue;
    if (req.session == busy_session && req.ts_s <= busy_until) {
      ++r.ignored_while_open;
      continue;
    }
    const auto& bars = sessions[req.session].bars;
    if (!tradable(req.bar_index, bars.size())) {
      ++r.skipped_no_next_bar;
      continue;
    }
    ExitRule use = rule;
    if (!take_profit_by_session.empty()) use.take_profit_bps = take_profit_by_session[req.session];
    Trade t = simulate_exit(bars, req.bar_index + 1, req.direction, use, costs);
    busy_until = t.exit_ts;
    busy_session = req.session;
    r.trades.push_back(t);
  }
  r.recompute(costs.round_trip_bps());
  return r;
}

// Concatenates fold results. Fold windows must be pairwise disjoint.
inline BacktestResult pool_folds(std::span<const BacktestResult> folds) {
  for (std::size_t i = 0; i < folds.size(); ++i) {
    for (std::size_t j = i + 1; j < folds.size(); ++j) {
      const auto& a = folds[i];
      const auto& b = folds[j];
      if (a.window_start_s < b.window_end_s && b.window_start_s < a.window_end_s) {
        throw ProtocolError("fold windows overlap (folds " + std::to_string(i + 1) + " and " +
                            std::to_string(j + 1) + ")");
      }
    }
  }
  BacktestResult p;
  if (folds.empty()) return p;
  p.window_start_s = folds.front().window_start_s;
  p.window_end_s = folds.front().window_end_s;
  for (const auto& f : folds) {
    p.trades.insert(p.trades.end(), f.trades.begin(), f.trades.end());
    p.n += f.n;
    p.wins += f.wins;
    p.total_gross_bps += f.total_gross_bps;
    p.total_net_bps += f.total_net_bps;
    p.skipped_no_next_bar += f.skipped_no_next_bar;
    p.ignored_while_open += f.ignored_while_open;
    p.window_start_s = std::min(p.window_start_s, f.window_start_s);
    p.window_end_s = std::max(p.window_end_s, f.window_end_s);
  }
  p.win_rate = p.n ? static_cast<double>(p.wins) / static_cast<double>(p.n) : 0.0;
  return p;
}

inline void write_trades_csv(std::ostream& out, std::span<const Trade> trades) {
  out << "entry_ts,exit_ts,direction,entry_px,exit_px,exit_reason,gross_bps,net_bps\n";
  std::string buf;
  char tmp[64];
  auto num = [&](double v) {
    auto [e, ec] = std::to_chars(tmp, tmp + sizeof tmp, v);
    buf.append(tmp, e);
  };
  for (const auto& t : trades) {
    buf.clear();
    detail::append_int(buf, t.entry_ts);
    buf.push_back(',');
    detail::append_int(buf, t.exit_ts);
    buf.push_back(',');
    detail::append_int(buf, t.direction);
    buf.push_back(',');
    detail::append_price(buf, t.entry_px);
    buf.push_back(',');
    detail::append_price(buf, t.exit_px);
    buf.push_back(',');
    buf += to_string(t.exit_reason);
    buf.push_back(',');
    num(t.gross_bps);
    buf.push_back(',');
    num(t.net_bps);
    buf.push_back('\n');
    out << buf;
  }
}

}  // namespace ofe
