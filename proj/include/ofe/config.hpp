#pragma once

// Single JSON run configuration covering every tunable. Defaults reproduce the
// published protocol; unknown keys and type mismatches are rejected with the
// offending field path.

#include <cstdint>
#include <fstream>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "ofe/backtest.hpp"
#include "ofe/common.hpp"
#include "ofe/markov.hpp"
#include "ofe/signal.hpp"
#include "ofe/synth.hpp"
#include "ofe/validate.hpp"

namespace ofe {

using json = nlohmann::ordered_json;

struct ValidationConfig {
  std::uint64_t seed = 7;
  int label_trials = 1000;
  int scramble_trials = 1000;
  int random_entry_trials = 10000;
  int direction_trials = 1000;
  int bonferroni_tests = 14;
  std::int64_t horizon_s = 300;
  std::size_t block_len = 300;
  int block_reps = 200;
  bool sensitivity = true;

  void validate() const {
    if (label_trials < 2 || scramble_trials < 2 || random_entry_trials < 2 || direction_trials < 2) {
      throw InputError("validation.*_trials must be >= 2");
    }
    if (bonferroni_tests < 1) throw InputError("validation.bonferroni_tests must be >= 1");
    if (horizon_s < 1) throw InputError("validation.horizon_s must be >= 1");
    if (block_len < 1) throw InputError("validation.block_len must be >= 1");
  }
};

struct RunConfig {
  EntropyConfig entropy;
  SignalConfig signal;
  ExitRule exit;
  CostModel costs;
  FoldSpec folds;
  SynthConfig synth;
  ValidationConfig validation;
  std::int64_t session_s = kMaxSessionSeconds;  // session length from the 09:30 ET open
  std::string data_dir = "data";
  std::string out_dir = "out";

  StrategyConfig strategy() const { return {signal, exit, costs}; }

  MagnitudeOptions magnitude_options() const {
    return {signal.entropy_pct, validation.block_len, validation.block_reps, validation.seed};
  }

  void validate() const {
    if (entropy.window_s < 2) throw InputError("entropy.window_s must be >= 2");
    if (entropy.stationary.max_iterations < 1) throw InputError("entropy.max_iterations must be >= 1");
    signal.validate();
    exit.validate();
    folds.validate();
    synth.validate();
    validation.validate();
    if (session_s < 1 || session_s > kMaxSessionSeconds) throw InputError("session_s must be in [1, 23400]");
  }
};

namespace detail {

// Copies j[key] into out when present; reports the dotted field path on a
// type mismatch.
template <class T>
void read_field(const json& j, const std::string& path, const char* key, T& out,
                std::set<std::string>& seen) {
  seen.insert(key);
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->template get<T>();
  } catch (const json::exception&) {
    throw InputError("config field '" + path + key + "' has the wrong type");
  }
}

inline void reject_unknown(const json& j, const std::string& path, const std::set<std::string>& seen) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!seen.count(it.key())) throw InputError("unknown config field '" + path + it.key() + "'");
  }
}

inline const json& section(const json& j, const char* key, const json& empty) {
  auto it = j.find(key);
  if (it == j.end()) return empty;
  if (!it->is_object()) throw InputError(std::string("config field '") + key + "' must be an object");
  return *it;
}

}  // namespace detail

inline json to_json(const RunConfig& c) {
  json j;
  j["session_s"] = c.session_s;
  j["data_dir"] = c.data_dir;
  j["out_dir"] = c.out_dir;
  j["entropy"] = {{"window_s", c.entropy.window_s},
                  {"min_transitions", c.entropy.min_transitions},
                  {"tolerance", c.entropy.stationary.tolerance},
                  {"max_iterations", c.entropy.stationary.max_iterations}};
  j["signal"] = {{"entropy_pct", c.signal.entropy_pct},
                 {"volume_pct", c.signal.volume_pct},
                 {"ret_min_bps", c.signal.ret_min_bps},
                 {"ret_max_bps", c.signal.ret_max_bps},
                 {"lookback_s", c.signal.lookback_s},
                 {"signed_band", c.signal.signed_band},
                 {"take_profit_grid", c.signal.take_profit_grid},
                 {"min_training_points", c.signal.min_training_points}};
  j["exit"] = {{"stop_bps", c.exit.stop_bps}, {"timeout_s", c.exit.timeout_s}};
  j["costs"] = {{"half_spread_bps", c.costs.half_spread_bps},
                {"slippage_bps", c.costs.slippage_bps},
                {"fees_bps", c.costs.fees_bps}};
  j["folds"] = {{"train_days", c.folds.train_days}, {"test_days", c.folds.test_days}};
  const auto& s = c.synth;
  j["synth"] = {{"seed", s.seed},
                {"n_days", s.n_days},
                {"start_date", to_string(s.start_date)},
                {"initial_price", s.initial_price},
                {"tick_size", s.tick_size},
                {"base_tick_rate", s.base_tick_rate},
                {"mean_trade_size", s.mean_trade_size},
                {"noise_vol_bps", s.noise_vol_bps},
                {"burst_rate", s.burst_rate},
                {"burst_len_s", s.burst_len_s},
                {"absorb_s", s.absorb_s},
                {"burst_drift_bps_per_s", s.burst_drift_bps_per_s},
                {"informed_trades_per_s", s.informed_trades_per_s},
                {"informed_clip", s.informed_clip},
                {"informed_clip_ramp", s.informed_clip_ramp},
                {"sign_persistence", s.sign_persistence},
                {"min_gap_s", s.min_gap_s},
                {"cluster_size", s.cluster_size},
                {"cluster_gap_s", s.cluster_gap_s},
                {"extended_ticks", s.extended_ticks}};
  const auto& v = c.validation;
  j["validation"] = {{"seed", v.seed},
                     {"label_trials", v.label_trials},
                     {"scramble_trials", v.scramble_trials},
                     {"random_entry_trials", v.random_entry_trials},
                     {"direction_trials", v.direction_trials},
                     {"bonferroni_tests", v.bonferroni_tests},
                     {"horizon_s", v.horizon_s},
                     {"block_len", v.block_len},
                     {"block_reps", v.block_reps},
                     {"sensitivity", v.sensitivity}};
  return j;
}

inline RunConfig config_from_json(const json& j) {
  using detail::read_field;
  if (!j.is_object()) throw InputError("config must be a JSON object");
  RunConfig c;
  const json empty = json::object();
  std::set<std::string> top;
  read_field(j, "", "session_s", c.session_s, top);
  read_field(j, "", "data_dir", c.data_dir, top);
  read_field(j, "", "out_dir", c.out_dir, top);
  for (const char* k : {"entropy", "signal", "exit", "costs", "folds", "synth", "validation"}) top.insert(k);
  detail::reject_unknown(j, "", top);

  {
    const auto& e = detail::section(j, "entropy", empty);
    std::set<std::string> seen;
    read_field(e, "entropy.", "window_s", c.entropy.window_s, seen);
    read_field(e, "entropy.", "min_transitions", c.entropy.min_transitions, seen);
    read_field(e, "entropy.", "tolerance", c.entropy.stationary.tolerance, seen);
    read_field(e, "entropy.", "max_iterations", c.entropy.stationary.max_iterations, seen);
    detail::reject_unknown(e, "entropy.", seen);
  }
  {
    const auto& e = detail::section(j, "signal", empty);
    std::set<std::string> seen;
    read_field(e, "signal.", "entropy_pct", c.signal.entropy_pct, seen);
    read_field(e, "signal.", "volume_pct", c.signal.volume_pct, seen);
    read_field(e, "signal.", "ret_min_bps", c.signal.ret_min_bps, seen);
    read_field(e, "signal.", "ret_max_bps", c.signal.ret_max_bps, seen);
    read_field(e, "signal.", "lookback_s", c.signal.lookback_s, seen);
    read_field(e, "signal.", "signed_band", c.signal.signed_band, seen);
    read_field(e, "signal.", "take_profit_grid", c.signal.take_profit_grid, seen);
    read_field(e, "signal.", "min_training_points", c.signal.min_training_points, seen);
    detail::reject_unknown(e, "signal.", seen);
  }
  {
    const auto& e = detail::section(j, "exit", empty);
    std::set<std::string> seen;
    read_field(e, "exit.", "stop_bps", c.exit.stop_bps, seen);
    read_field(e, "exit.", "timeout_s", c.exit.timeout_s, seen);
    detail::reject_unknown(e, "exit.", seen);
  }
  {
    const auto& e = detail::section(j, "costs", empty);
    std::set<std::string> seen;
    read_field(e, "costs.", "half_spread_bps", c.costs.half_spread_bps, seen);
    read_field(e, "costs.", "slippage_bps", c.costs.slippage_bps, seen);
    read_field(e, "costs.", "fees_bps", c.costs.fees_bps, seen);
    detail::reject_unknown(e, "costs.", seen);
  }
  {
    const auto& e = detail::section(j, "folds", empty);
    std::set<std::string> seen;
    read_field(e, "folds.", "train_days", c.folds.train_days, seen);
    read_field(e, "folds.", "test_days", c.folds.test_days, seen);
    detail::reject_unknown(e, "folds.", seen);
  }
  {
    const auto& e = detail::section(j, "synth", empty);
    auto& s = c.synth;
    std::set<std::string> seen;
    std::string start = to_string(s.start_date);
    read_field(e, "synth.", "seed", s.seed, seen);
    read_field(e, "synth.", "n_days", s.n_days, seen);
    read_field(e, "synth.", "start_date", start, seen);
    read_field(e, "synth.", "initial_price", s.initial_price, seen);
    read_field(e, "synth.", "tick_size", s.tick_size, seen);
    read_field(e, "synth.", "base_tick_rate", s.base_tick_rate, seen);
    read_field(e, "synth.", "mean_trade_size", s.mean_trade_size, seen);
    read_field(e, "synth.", "noise_vol_bps", s.noise_vol_bps, seen);
    read_field(e, "synth.", "burst_rate", s.burst_rate, seen);
    read_field(e, "synth.", "burst_len_s", s.burst_len_s, seen);
    read_field(e, "synth.", "absorb_s", s.absorb_s, seen);
    read_field(e, "synth.", "burst_drift_bps_per_s", s.burst_drift_bps_per_s, seen);
    read_field(e, "synth.", "informed_trades_per_s", s.informed_trades_per_s, seen);
    read_field(e, "synth.", "informed_clip", s.informed_clip, seen);
    read_field(e, "synth.", "informed_clip_ramp", s.informed_clip_ramp, seen);
    read_field(e, "synth.", "sign_persistence", s.sign_persistence, seen);
    read_field(e, "synth.", "min_gap_s", s.min_gap_s, seen);
    read_field(e, "synth.", "cluster_size", s.cluster_size, seen);
    read_field(e, "synth.", "cluster_gap_s", s.cluster_gap_s, seen);
    read_field(e, "synth.", "extended_ticks", s.extended_ticks, seen);
    detail::reject_unknown(e, "synth.", seen);
    s.start_date = parse_date(start);
  }
  {
    const auto& e = detail::section(j, "validation", empty);
    auto& v = c.validation;
    std::set<std::string> seen;
    read_field(e, "validation.", "seed", v.seed, seen);
    read_field(e, "validation.", "label_trials", v.label_trials, seen);
    read_field(e, "validation.", "scramble_trials", v.scramble_trials, seen);
    read_field(e, "validation.", "random_entry_trials", v.random_entry_trials, seen);
    read_field(e, "validation.", "direction_trials", v.direction_trials, seen);
    read_field(e, "validation.", "bonferroni_tests", v.bonferroni_tests, seen);
    read_field(e, "validation.", "horizon_s", v.horizon_s, seen);
    read_field(e, "validation.", "block_len", v.block_len, seen);
    read_field(e, "validation.", "block_reps", v.block_reps, seen);
    read_field(e, "validation.", "sensitivity", v.sensitivity, seen);
    detail::reject_unknown(e, "validation.", seen);
  }
  c.synth.session_s = c.session_s;
  c.validate();
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError("config " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

}  // namespace ofe
