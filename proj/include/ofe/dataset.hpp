#pragma once

#include <span>
#include <vector>

#include "ofe/common.hpp"
#include "ofe/ingest.hpp"
#include "ofe/markov.hpp"

namespace ofe {

// One trading session's bars and its entropy series. entropy[k] belongs to
// bars[k + 1]: the first bar of a session carries no state.
struct SessionData {
  SessionSpec session;
  std::vector<SecondBar> bars;
  std::vector<EntropyPoint> entropy;

  const EntropyPoint* entropy_at_bar(std::size_t bar_index) const {
    if (bar_index == 0 || bar_index - 1 >= entropy.size()) return nullptr;
    return &entropy[bar_index - 1];
  }

  void check_aligned() const {
    const std::size_t expect = bars.empty() ? 0 : bars.size() - 1;
    if (entropy.size() != expect) {
      throw InputError("entropy series for " + to_string(session.date) +
                       " does not match its bars (" + std::to_string(entropy.size()) +
                       " points, " + std::to_string(bars.size()) + " bars)");
    }
    for (std::size_t k = 0; k < entropy.size(); ++k) {
      if (entropy[k].ts_s != bars[k + 1].ts_s) {
        throw InputError("entropy timestamps do not match bars for " + to_string(session.date));
      }
    }
  }
};

inline SessionData build_session(const SessionSpec& spec, std::span<const TickRecord> ticks,
                                 const EntropyConfig& cfg) {
  SessionData d;
  d.session = spec;
  d.bars = ticks_to_bars(ticks, spec);
  d.entropy = entropy_series(d.bars, cfg);
  return d;
}

inline SessionData build_session(const SessionSpec& spec, std::vector<SecondBar> bars,
                                 const EntropyConfig& cfg) {
  SessionData d;
  d.session = spec;
  d.bars = std::move(bars);
  d.entropy = entropy_series(d.bars, cfg);
  return d;
}

// Index of the last bar with ts_s <= t, or -1.
inline std::ptrdiff_t bar_at_or_before(std::span<const SecondBar> bars, std::int64_t t) {
  auto it = std::upper_bound(bars.begin(), bars.end(), t,
                             [](std::int64_t v, const SecondBar& b) { return v < b.ts_s; });
  return static_cast<std::ptrdiff_t>(it - bars.begin()) - 1;
}

}  // namespace ofe
