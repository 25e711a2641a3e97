#pragma once

// Full validation run plus JSON and CSV emitters for the walk-forward table,
// the quintile table, direction accuracy, cumulative PnL, attribution and the
// sensitivity sweep.

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ofe/config.hpp"
#include "ofe/dataset.hpp"
#include "ofe/oracle.hpp"
#include "ofe/validate.hpp"

namespace ofe {

struct ValidationReport {
  WalkForwardResult wf;
  MagnitudeSample sample;
  StatReport stats;
  PlaceboResult label;
  PlaceboResult scramble;
  PlaceboResult random_entry;
  DirectionNeutral neutral;
  std::vector<SensitivityRow> sensitivity;
  std::optional<OracleReport> oracle;
};

// (session, bar index) of the bar stamped ts, or nullopt.
inline std::optional<std::pair<std::size_t, std::size_t>> locate_bar(std::span<const SessionData> sessions,
                                                                      std::int64_t ts) {
  for (std::size_t s = 0; s < sessions.size(); ++s) {
    const auto& b = sessions[s].bars;
    if (b.empty() || ts < b.front().ts_s || ts > b.back().ts_s) continue;
    auto it = std::lower_bound(b.begin(), b.end(), ts,
                               [](const SecondBar& x, std::int64_t v) { return x.ts_s < v; });
    if (it != b.end() && it->ts_s == ts) return std::pair{s, static_cast<std::size_t>(it - b.begin())};
  }
  return std::nullopt;
}

// Signal bars of the trades actually taken.
inline std::vector<EntryRequest> taken_entries(std::span<const SessionData> sessions,
                                               std::span<const Trade> trades) {
  std::vector<EntryRequest> out;
  for (const auto& t : trades) {
    auto loc = locate_bar(sessions, t.entry_ts);
    if (!loc || loc->second == 0) throw ProtocolError("trade entry not found in session bars");
    out.push_back({loc->first, loc->second - 1, sessions[loc->first].bars[loc->second - 1].ts_s, t.direction});
  }
  return out;
}

inline ValidationReport run_validation(std::span<const SessionData> sessions, const RunConfig& cfg,
                                       unsigned workers, std::span<const Burst> bursts = {}) {
  const auto& v = cfg.validation;
  ValidationReport r;
  r.wf = walk_forward(sessions, cfg.folds, cfg.strategy(), cfg.magnitude_options(), workers);

  r.sample = collect_magnitude_sample(sessions, v.horizon_s);
  auto& st = r.stats;
  st.magnitude = magnitude_stats(r.sample, cfg.magnitude_options());
  st.magnitude_ratio = st.magnitude.q1_q5_ratio;
  st.welch_t = st.magnitude.q1_vs_q5.t;
  st.welch_p = st.magnitude.q1_vs_q5.p;
  st.direction_k = r.wf.pooled.wins;
  st.direction_n = r.wf.pooled.n;
  st.binom_z = r.wf.pooled_direction.z;
  st.binom_p = r.wf.pooled_direction.p;
  st.binom_exact_p = r.wf.pooled_direction.exact_p;
  st.bonferroni_tests = v.bonferroni_tests;
  st.bonferroni_alpha = 0.05 / static_cast<double>(v.bonferroni_tests);

  r.label = placebo_label_permutation(r.sample, {v.label_trials, v.seed, workers});
  r.scramble = placebo_temporal_scramble(r.sample, {v.scramble_trials, v.seed, workers});

  const std::size_t first = r.wf.folds.front().fold.test_begin;
  const std::size_t last = r.wf.folds.back().fold.test_end;
  ExecutionContext test_ctx{sessions.subspan(first, last - first),
                            {r.wf.take_profit_by_session.begin() + static_cast<std::ptrdiff_t>(first),
                             r.wf.take_profit_by_session.begin() + static_cast<std::ptrdiff_t>(last)},
                            cfg.exit, cfg.costs};
  const auto table = tabulate_outcomes(test_ctx);
  r.random_entry = placebo_random_entry(table, r.wf.pooled.n, r.wf.pooled.total_net_bps,
                                        cfg.costs.round_trip_bps(), {v.random_entry_trials, v.seed, workers});

  ExecutionContext full_ctx{sessions, r.wf.take_profit_by_session, cfg.exit, cfg.costs};
  const auto entries = taken_entries(sessions, r.wf.pooled.trades);
  r.neutral = direction_randomized(full_ctx, entries, {v.direction_trials, v.seed, workers});
  st.attribution = attribute_profit(r.wf.pooled.total_net_bps, r.random_entry.null_mean, r.neutral);

  for (const auto* p : {&r.label, &r.scramble, &r.random_entry}) st.placebos[p->name] = *p;
  if (v.sensitivity) r.sensitivity = sensitivity_sweep(sessions, cfg.folds, cfg.strategy(), workers);
  if (!bursts.empty()) r.oracle = oracle_report(label_entropy(sessions, bursts), cfg.signal.entropy_pct, v.seed);
  return r;
}

// ---------------------------------------------------------------------------
// JSON

// NaN and infinities are not representable in JSON; they become null.
inline json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

inline json to_json(const WelchResult& w) { return {{"t", num(w.t)}, {"df", num(w.df)}, {"p", num(w.p)}}; }

inline json to_json(const BinomialResult& b) {
  return {{"z", num(b.z)}, {"p", num(b.p)}, {"exact_p", num(b.exact_p)}};
}

inline json to_json(const MagnitudeTable& t) {
  json rows = json::array();
  for (const auto& q : t.quintiles) {
    rows.push_back({{"quintile", q.quintile},
                    {"n", q.n},
                    {"h_min", num(q.h_min)},
                    {"h_max", num(q.h_max)},
                    {"mean_abs_bps", num(q.mean_abs_bps)},
                    {"se_bps", num(q.se_bps)},
                    {"mean_signed_bps", num(q.mean_signed_bps)},
                    {"frac_positive", num(q.frac_positive)}});
  }
  return {{"n", t.n},
          {"quintiles", rows},
          {"unconditional_mean_bps", num(t.unconditional_mean_bps)},
          {"tail_threshold", num(t.tail_threshold)},
          {"tail_n", t.tail_n},
          {"tail_mean_bps", num(t.tail_mean_bps)},
          {"tail_ratio", num(t.tail_ratio)},
          {"tail_vs_rest", to_json(t.tail_vs_rest)},
          {"q1_q5_ratio", num(t.q1_q5_ratio)},
          {"q1_vs_q5", to_json(t.q1_vs_q5)},
          {"ratio_block_se", num(t.ratio_block_se)},
          {"empty_quintile", t.empty_quintile}};
}

inline json summary_json(const BacktestResult& r) {
  return {{"n", r.n},
          {"wins", r.wins},
          {"win_rate", num(r.win_rate)},
          {"total_gross_bps", num(r.total_gross_bps)},
          {"total_net_bps", num(r.total_net_bps)},
          {"skipped_no_next_bar", r.skipped_no_next_bar},
          {"ignored_while_open", r.ignored_while_open},
          {"window_start_s", r.window_start_s},
          {"window_end_s", r.window_end_s}};
}

inline json to_json(const Thresholds& th) {
  json grid = json::array();
  for (double g : th.grid_pnl_bps) grid.push_back(num(g));
  return {{"h_lo", num(th.h_lo)},
          {"vol_hi", th.vol_hi},
          {"ret_min_bps", th.ret_min_bps},
          {"ret_max_bps", th.ret_max_bps},
          {"take_profit_bps", num(th.take_profit_bps)},
          {"train_end_s", th.train_end_s},
          {"train_points", th.train_points},
          {"train_bars", th.train_bars},
          {"grid_pnl_bps", grid},
          {"warnings", th.warnings}};
}

inline std::string period_of(std::span<const SessionData> sessions, std::size_t begin, std::size_t end) {
  return to_string(sessions[begin].session.date) + ".." + to_string(sessions[end - 1].session.date);
}

inline json to_json(const FoldResult& f, std::span<const SessionData> sessions) {
  return {{"fold", f.index},
          {"train", period_of(sessions, f.fold.train_begin, f.fold.train_end)},
          {"test", period_of(sessions, f.fold.test_begin, f.fold.test_end)},
          {"thresholds", to_json(f.thresholds)},
          {"result", summary_json(f.result)},
          {"direction", to_json(f.direction)},
          {"magnitude", to_json(f.magnitude)}};
}

inline json to_json(const PlaceboResult& p) {
  return {{"name", p.name},
          {"trials", p.trials},
          {"observed", num(p.observed)},
          {"null_mean", num(p.null_mean)},
          {"null_sd", num(p.null_sd)},
          {"z", num(p.z)},
          {"empirical_p", num(p.empirical_p)},
          {"defined", p.defined}};
}

inline json to_json(const Attribution& a) {
  return {{"observed_bps", num(a.observed_bps)},
          {"random_entry_mean_bps", num(a.random_entry_mean_bps)},
          {"direction_neutral_bps", num(a.direction_neutral_bps)},
          {"direction_mc_mean_bps", num(a.direction_mc_mean_bps)},
          {"direction_mc_sd_bps", num(a.direction_mc_sd_bps)},
          {"timing_share", num(a.timing_share)},
          {"payoff_share", num(a.payoff_share)},
          {"direction_share", num(a.direction_share)},
          {"defined", a.defined}};
}

inline json to_json(const SensitivityRow& r) {
  return {{"param", r.param},
          {"level", r.level},
          {"value", r.value},
          {"valid", r.valid},
          {"note", r.note},
          {"total_net_bps", num(r.total_net_bps)},
          {"n_trades", r.n_trades},
          {"pct_change", num(r.pct_change)}};
}

inline json to_json(const OracleReport& o) {
  return {{"n_points", o.n_points},
          {"n_inside", o.n_inside},
          {"split_defined", o.split_defined},
          {"mean_h_inside", num(o.mean_h_inside)},
          {"mean_h_outside", num(o.mean_h_outside)},
          {"tail_threshold", num(o.tail_threshold)},
          {"tail_n", o.tail_n},
          {"precision", num(o.precision)},
          {"base_rate", num(o.base_rate)},
          {"shuffled_precision", num(o.shuffled_precision)}};
}

inline json walkforward_json(const WalkForwardResult& wf, std::span<const SessionData> sessions) {
  json folds = json::array();
  for (const auto& f : wf.folds) folds.push_back(to_json(f, sessions));
  return {{"folds", folds}, {"pooled", summary_json(wf.pooled)}, {"pooled_direction", to_json(wf.pooled_direction)}};
}

inline json to_json(const ValidationReport& r, std::span<const SessionData> sessions) {
  const auto& st = r.stats;
  json placebo_zs = json::object();
  for (const auto& [name, p] : st.placebos) placebo_zs[name] = num(p.z);
  json j;
  j["stats"] = {{"magnitude_ratio", num(st.magnitude_ratio)},
                {"welch_t", num(st.welch_t)},
                {"welch_p", num(st.welch_p)},
                {"direction_k", st.direction_k},
                {"direction_n", st.direction_n},
                {"binom_z", num(st.binom_z)},
                {"binom_p", num(st.binom_p)},
                {"binom_exact_p", num(st.binom_exact_p)},
                {"placebo_zs", placebo_zs},
                {"bonferroni_tests", st.bonferroni_tests},
                {"bonferroni_alpha", st.bonferroni_alpha}};
  j["magnitude"] = to_json(st.magnitude);
  j["walkforward"] = walkforward_json(r.wf, sessions);
  j["placebos"] = {to_json(r.label), to_json(r.scramble), to_json(r.random_entry)};
  j["attribution"] = to_json(st.attribution);
  json sens = json::array();
  for (const auto& row : r.sensitivity) sens.push_back(to_json(row));
  j["sensitivity"] = sens;
  if (r.oracle) j["oracle"] = to_json(*r.oracle);
  return j;
}

// ---------------------------------------------------------------------------
// CSV tables

namespace detail {

inline std::string fmt(double x) {
  if (!std::isfinite(x)) return "";
  char buf[64];
  auto [e, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, e);
}

}  // namespace detail

// Walk-forward table: one row per fold plus a pooled row.
inline void write_walkforward_table(std::ostream& out, const WalkForwardResult& wf,
                                    std::span<const SessionData> sessions) {
  using detail::fmt;
  out << "fold,period,trades,win_rate,magnitude_ratio,t_stat,pnl_bps\n";
  for (const auto& f : wf.folds) {
    out << f.index << ',' << period_of(sessions, f.fold.test_begin, f.fold.test_end) << ','
        << f.result.n << ',' << fmt(f.result.win_rate) << ',' << fmt(f.magnitude.q1_q5_ratio) << ','
        << fmt(f.magnitude.q1_vs_q5.t) << ',' << fmt(f.result.total_net_bps) << '\n';
  }
  out << "pooled,"
      << period_of(sessions, wf.folds.front().fold.test_begin, wf.folds.back().fold.test_end) << ','
      << wf.pooled.n << ',' << fmt(wf.pooled.win_rate) << ",,," << fmt(wf.pooled.total_net_bps) << '\n';
}

inline void write_quintile_table(std::ostream& out, const MagnitudeTable& t) {
  using detail::fmt;
  out << "quintile,n,h_min,h_max,mean_abs_bps,se_bps\n";
  for (const auto& q : t.quintiles) {
    out << q.quintile << ',' << q.n << ',' << fmt(q.h_min) << ',' << fmt(q.h_max) << ','
        << fmt(q.mean_abs_bps) << ',' << fmt(q.se_bps) << '\n';
  }
}

// Directional accuracy per fold with the 95% band around one half.
inline void write_direction_table(std::ostream& out, const WalkForwardResult& wf) {
  using detail::fmt;
  out << "fold,n,wins,win_rate,band_lo,band_hi,z,p\n";
  auto row = [&](const std::string& name, const BacktestResult& r, const BinomialResult& b) {
    const auto band = r.n > 0 ? fair_coin_band(r.n) : std::pair{0.0, 1.0};
    out << name << ',' << r.n << ',' << r.wins << ',' << fmt(r.win_rate) << ',' << fmt(band.first)
        << ',' << fmt(band.second) << ',' << fmt(b.z) << ',' << fmt(b.p) << '\n';
  };
  for (const auto& f : wf.folds) row(std::to_string(f.index), f.result, f.direction);
  row("pooled", wf.pooled, wf.pooled_direction);
}

// Cumulative out-of-sample PnL in exit order, tagged with the fold.
inline void write_cumulative_pnl(std::ostream& out, const WalkForwardResult& wf) {
  using detail::fmt;
  out << "trade,fold,exit_ts,net_bps,cumulative_bps\n";
  double cum = 0.0;
  std::size_t i = 0;
  for (const auto& f : wf.folds) {
    for (const auto& t : f.result.trades) {
      cum += t.net_bps;
      out << ++i << ',' << f.index << ',' << t.exit_ts << ',' << fmt(t.net_bps) << ',' << fmt(cum) << '\n';
    }
  }
}

inline void write_attribution_table(std::ostream& out, const Attribution& a) {
  using detail::fmt;
  out << "component,pnl_bps,share\n";
  out << "timing," << fmt(a.direction_neutral_bps - a.random_entry_mean_bps) << ',' << fmt(a.timing_share) << '\n';
  out << "payoff," << fmt(a.random_entry_mean_bps) << ',' << fmt(a.payoff_share) << '\n';
  out << "direction," << fmt(a.observed_bps - a.direction_neutral_bps) << ',' << fmt(a.direction_share) << '\n';
  out << "total," << fmt(a.observed_bps) << ',' << (a.defined ? "1" : "") << '\n';
}

inline void write_sensitivity_table(std::ostream& out, std::span<const SensitivityRow> rows) {
  using detail::fmt;
  out << "param,level,value,valid,total_net_bps,n_trades,pct_change\n";
  for (const auto& r : rows) {
    out << r.param << ',' << fmt(r.level) << ',' << fmt(r.value) << ',' << (r.valid ? 1 : 0) << ','
        << (r.valid ? fmt(r.total_net_bps) : "") << ',' << r.n_trades << ','
        << (r.valid ? fmt(r.pct_change) : "") << '\n';
  }
}

}  // namespace ofe
