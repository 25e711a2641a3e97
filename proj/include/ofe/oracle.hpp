#pragma once

// Scores an entropy series against the synthetic burst ground truth.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "ofe/common.hpp"
#include "ofe/dataset.hpp"
#include "ofe/synth.hpp"

namespace ofe {

struct OracleReport {
  std::size_t n_points = 0;
  std::size_t n_inside = 0;
  double mean_h_inside = std::numeric_limits<double>::quiet_NaN();
  double mean_h_outside = std::numeric_limits<double>::quiet_NaN();
  bool split_defined = false;  // needs points on both sides
  double tail_threshold = 0.0;
  std::size_t tail_n = 0;
  double precision = std::numeric_limits<double>::quiet_NaN();  // tail points inside bursts
  double base_rate = std::numeric_limits<double>::quiet_NaN();  // all points inside bursts
  double shuffled_precision = std::numeric_limits<double>::quiet_NaN();
};

struct LabeledEntropy {
  std::vector<double> h;
  std::vector<std::uint8_t> inside;
};

// Defined entropy points labelled by whether their second falls inside a
// burst. Session i is matched with burst day i.
inline LabeledEntropy label_entropy(std::span<const SessionData> sessions, std::span<const Burst> bursts) {
  LabeledEntropy out;
  for (std::size_t s = 0; s < sessions.size(); ++s) {
    const auto& sd = sessions[s];
    std::vector<std::uint8_t> mark(static_cast<std::size_t>(sd.session.close_s - sd.session.open_s), 0);
    for (const auto& b : bursts) {
      if (b.day != static_cast<int>(s)) continue;
      for (std::int64_t t = b.start_s; t < b.start_s + b.len_s; ++t) {
        if (t >= 0 && t < static_cast<std::int64_t>(mark.size())) mark[static_cast<std::size_t>(t)] = 1;
      }
    }
    for (const auto& e : sd.entropy) {
      if (!e.defined) continue;
      out.h.push_back(e.h);
      out.inside.push_back(mark[static_cast<std::size_t>(e.ts_s - sd.session.open_s)]);
    }
  }
  return out;
}

inline double tail_precision(std::span<const double> h, std::span<const std::uint8_t> inside,
                             double threshold, std::size_t* tail_n = nullptr) {
  std::size_t n = 0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (h[i] < threshold) {
      ++n;
      hit += inside[i];
    }
  }
  if (tail_n) *tail_n = n;
  return n ? static_cast<double>(hit) / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

inline OracleReport oracle_report(const LabeledEntropy& data, double tail_pct = 0.05,
                                  std::uint64_t shuffle_seed = 7) {
  OracleReport r;
  r.n_points = data.h.size();
  if (r.n_points == 0) return r;
  double sin = 0.0;
  double sout = 0.0;
  for (std::size_t i = 0; i < r.n_points; ++i) {
    if (data.inside[i]) {
      sin += data.h[i];
      ++r.n_inside;
    } else {
      sout += data.h[i];
    }
  }
  const std::size_t n_out = r.n_points - r.n_inside;
  if (r.n_inside) r.mean_h_inside = sin / static_cast<double>(r.n_inside);
  if (n_out) r.mean_h_outside = sout / static_cast<double>(n_out);
  r.split_defined = r.n_inside > 0 && n_out > 0;
  r.base_rate = static_cast<double>(r.n_inside) / static_cast<double>(r.n_points);
  r.tail_threshold = percentile(data.h, tail_pct);
  r.precision = tail_precision(data.h, data.inside, r.tail_threshold, &r.tail_n);

  std::vector<std::uint8_t> shuffled = data.inside;
  auto rng = make_stream(shuffle_seed, 0, 0x0ac1e);
  shuffle(std::span<std::uint8_t>(shuffled), rng);
  r.shuffled_precision = tail_precision(data.h, shuffled, r.tail_threshold);
  return r;
}

}  // namespace ofe
