#pragma once

// Per-day files in a data directory, keyed by date in the file name:
// ticks_YYYY-MM-DD.csv, bars_YYYY-MM-DD.csv, entropy_YYYY-MM-DD.csv.

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "ofe/calendar.hpp"
#include "ofe/common.hpp"
#include "ofe/dataset.hpp"
#include "ofe/ingest.hpp"
#include "ofe/markov.hpp"

namespace ofe {

namespace fs = std::filesystem;

inline std::string day_file(const std::string& kind, Date d) { return kind + "_" + to_string(d) + ".csv"; }

// Dates with a `kind` file in dir, ascending.
inline std::map<Date, fs::path> discover(const fs::path& dir, const std::string& kind) {
  std::map<Date, fs::path> out;
  if (!fs::is_directory(dir)) throw InputError("not a directory: " + dir.string());
  const std::string prefix = kind + "_";
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.size() != prefix.size() + 14 || name.rfind(prefix, 0) != 0 || !name.ends_with(".csv")) continue;
    try {
      out.emplace(parse_date(name.substr(prefix.size(), 10)), e.path());
    } catch (const InputError&) {
    }
  }
  return out;
}

inline std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw InputError("cannot write " + p.string());
  return out;
}

inline std::vector<EntropyPoint> read_entropy_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw InputError("cannot open " + p.string());
  return read_entropy_csv(in, p.string());
}

struct LoadStats {
  std::size_t days = 0;
  std::size_t tick_rows = 0;
  std::size_t row_errors = 0;
  std::size_t dropped_outside_session = 0;
  std::size_t entropy_computed = 0;  // days whose entropy was computed here
  std::size_t non_converged = 0;
};

// Loads every day found in dir. Per day the richest available inputs are
// used: bars + entropy (unless reuse_entropy is off), else bars, else ticks.
inline std::vector<SessionData> load_sessions(const fs::path& dir, std::int64_t session_s,
                                              const EntropyConfig& cfg, unsigned workers,
                                              LoadStats* stats = nullptr, bool reuse_entropy = true) {
  const auto ticks = discover(dir, "ticks");
  const auto bars = discover(dir, "bars");
  const auto ent = discover(dir, "entropy");
  std::vector<Date> dates;
  for (const auto* m : {&ticks, &bars}) {
    for (const auto& [d, p] : *m) dates.push_back(d);
  }
  std::sort(dates.begin(), dates.end());
  dates.erase(std::unique(dates.begin(), dates.end()), dates.end());
  if (dates.empty()) throw InputError("no ticks_*.csv or bars_*.csv files in " + dir.string());

  std::vector<SessionData> out(dates.size());
  std::vector<LoadStats> per(dates.size());
  std::vector<std::string> errors(dates.size());
  parallel_for(dates.size(), workers, [&](std::size_t i) {
    try {
      const Date d = dates[i];
      const auto spec = SessionSpec::from_open(d, session_s);
      auto& sd = out[i];
      sd.session = spec;
      if (auto b = bars.find(d); b != bars.end()) {
        sd.bars = read_bars(b->second.string());
      } else {
        auto parsed = parse_ticks(ticks.at(d).string());
        per[i].tick_rows = parsed.rows;
        per[i].row_errors = parsed.errors.size();
        sd.bars = ticks_to_bars(parsed.ticks, spec, &per[i].dropped_outside_session);
      }
      if (auto e = ent.find(d); reuse_entropy && e != ent.end() && bars.count(d)) {
        sd.entropy = read_entropy_file(e->second);
        sd.check_aligned();
      } else {
        sd.entropy = entropy_series(sd.bars, cfg);
        per[i].entropy_computed = 1;
        for (const auto& p : sd.entropy) per[i].non_converged += !p.converged;
      }
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  for (const auto& e : errors) {
    if (!e.empty()) throw InputError(e);
  }
  if (stats) {
    *stats = {};
    stats->days = dates.size();
    for (const auto& p : per) {
      stats->tick_rows += p.tick_rows;
      stats->row_errors += p.row_errors;
      stats->dropped_outside_session += p.dropped_outside_session;
      stats->entropy_computed += p.entropy_computed;
      stats->non_converged += p.non_converged;
    }
  }
  return out;
}

}  // namespace ofe
