#pragma once

// Synthetic trade tape: a noise-trader baseline plus informed bursts of random
// sign. A burst has two phases:
//   absorption  the informed trader works a large, growing order against the
//               noise flow at a fixed price (elevated tick rate, flat price);
//   release     the price then drifts in the burst's sign with persistent
//               same-direction steps at ordinary volume.
// The burst sign is drawn independently of everything before the burst, so
// bursts carry magnitude information but no direction information.

#include <cmath>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ofe/calendar.hpp"
#include "ofe/common.hpp"
#include "ofe/ingest.hpp"

namespace ofe {

struct SynthConfig {
  std::uint64_t seed = 7;
  int n_days = 36;
  Date start_date{2025, 10, 1};
  std::int64_t session_s = 23'400;
  double initial_price = 670.0;
  double tick_size = 0.01;

  double base_tick_rate = 4.0;      // noise trades per second
  double mean_trade_size = 100.0;   // geometric mean size of noise trades
  double noise_vol_bps = 0.6;       // per sqrt(second)

  double burst_rate = 50.0;         // bursts per day
  std::int64_t burst_len_s = 75;    // absorption + release
  std::int64_t absorb_s = 30;       // absorption part of burst_len_s
  double burst_drift_bps_per_s = 0.8;
  double informed_trades_per_s = 6.0;
  std::int64_t informed_clip = 600;       // shares per informed trade at burst start
  std::int64_t informed_clip_ramp = 40;   // added per second of absorption
  double sign_persistence = 0.8;    // probability a release step keeps the burst sign
  std::int64_t min_gap_s = 300;     // quiet seconds between clusters
  int cluster_size = 6;             // bursts per cluster
  std::int64_t cluster_gap_s = 45;  // quiet seconds between bursts of a cluster

  int extended_ticks = 500;         // pre/post-market trades per day (outside the session)

  void validate() const {
    if (n_days < 1) throw InputError("n_days must be >= 1");
    if (session_s < 1 || session_s > kMaxSessionSeconds) {
      throw InputError("session_s must be in [1, 23400]");
    }
    if (!(initial_price > 0.0)) throw InputError("initial_price must be positive");
    if (!(tick_size > 0.0)) throw InputError("tick_size must be positive");
    if (!(base_tick_rate > 0.0)) throw InputError("base_tick_rate must be positive");
    if (!(mean_trade_size >= 1.0)) throw InputError("mean_trade_size must be >= 1");
    if (!(noise_vol_bps > 0.0)) throw InputError("noise_vol_bps must be positive");
    if (burst_rate < 0.0) throw InputError("burst_rate must be >= 0");
    if (burst_len_s < 2 || burst_len_s >= session_s) {
      throw InputError("burst_len_s must be in [2, session_s)");
    }
    if (absorb_s < 1 || absorb_s >= burst_len_s) {
      throw InputError("absorb_s must be in [1, burst_len_s)");
    }
    if (!(burst_drift_bps_per_s > 0.0)) throw InputError("burst_drift_bps_per_s must be positive");
    if (!(informed_trades_per_s > 0.0)) throw InputError("informed_trades_per_s must be positive");
    if (informed_clip < 1 || informed_clip_ramp < 0) throw InputError("bad informed clip sizes");
    if (!(sign_persistence > 0.5 && sign_persistence <= 1.0)) {
      throw InputError("sign_persistence must be in (0.5, 1]");
    }
    if (min_gap_s < 0) throw InputError("min_gap_s must be >= 0");
    if (cluster_size < 1) throw InputError("cluster_size must be >= 1");
    if (cluster_gap_s < 0) throw InputError("cluster_gap_s must be >= 0");
    if (extended_ticks < 0) throw InputError("extended_ticks must be >= 0");
  }
};

struct Burst {
  int day = 0;
  std::int64_t start_s = 0;  // seconds after the session open
  std::int64_t len_s = 0;
  int sign = 0;

  bool operator==(const Burst&) const = default;
};

using BurstLog = std::vector<Burst>;

struct SynthDay {
  Date date;
  SessionSpec session;
  std::vector<TickRecord> ticks;  // includes pre/post-market ticks
  std::size_t session_ticks = 0;
  std::size_t extended_ticks = 0;
  std::vector<Burst> bursts;
};

namespace detail {

inline std::int64_t geometric_size(std::mt19937_64& rng, double mean) {
  if (mean <= 1.0) return 1;
  const double u = 1.0 - uniform01(rng);
  const double p = 1.0 / mean;
  return 1 + static_cast<std::int64_t>(std::floor(std::log(u) / std::log1p(-p)));
}

inline double round_to_tick(double px, double tick) {
  return std::max(tick, std::round(px / tick) * tick);
}

// Sorted sub-second offsets (ns) for n trades.
inline void subsecond_offsets(std::mt19937_64& rng, std::size_t n, std::vector<std::int64_t>& out) {
  out.resize(n);
  for (auto& o : out) o = static_cast<std::int64_t>(uniform_index(rng, kNanosPerSecond));
  std::sort(out.begin(), out.end());
}

}  // namespace detail

// Burst schedule for one day. Bursts come in clusters of `cluster_size`
// separated by `cluster_gap_s` quiet seconds; clusters are placed
// sequentially with exponential spacing on top of `min_gap_s`, so bursts never
// overlap and most quiet time lies far from any burst.
inline std::vector<Burst> schedule_bursts(const SynthConfig& cfg, int day, std::mt19937_64& rng) {
  std::vector<Burst> out;
  if (cfg.burst_rate <= 0.0) return out;
  const double clusters_per_day = cfg.burst_rate / static_cast<double>(cfg.cluster_size);
  const std::int64_t cluster_len =
      cfg.cluster_size * cfg.burst_len_s + (cfg.cluster_size - 1) * cfg.cluster_gap_s;
  const double cycle = static_cast<double>(cfg.session_s) / clusters_per_day;
  const double mean_wait = std::max(1.0, cycle - static_cast<double>(cluster_len + cfg.min_gap_s));
  // The first burst may not start before a full trailing window has elapsed.
  double t = static_cast<double>(cfg.min_gap_s);
  while (true) {
    t += -std::log(1.0 - uniform01(rng)) * mean_wait;
    auto start = static_cast<std::int64_t>(t);
    for (int i = 0; i < cfg.cluster_size; ++i) {
      if (start + cfg.burst_len_s >= cfg.session_s) return out;
      const int sign = uniform01(rng) < 0.5 ? -1 : 1;
      out.push_back({day, start, cfg.burst_len_s, sign});
      start += cfg.burst_len_s + cfg.cluster_gap_s;
    }
    t = static_cast<double>(start - cfg.cluster_gap_s + cfg.min_gap_s);
  }
}

inline SynthDay generate_day(const SynthConfig& cfg, int day) {
  auto rng = make_stream(cfg.seed, static_cast<std::uint64_t>(day), 0x5e55);
  SynthDay out;
  out.date = trading_days(cfg.start_date, day + 1).back();
  out.session = SessionSpec::from_open(out.date, cfg.session_s);
  out.bursts = schedule_bursts(cfg, day, rng);

  // Each day opens within ~50 bps of the reference price.
  const double day_open = cfg.initial_price * (1.0 + 50.0 * standard_normal(rng) / kBpsPerUnit);
  double x_bps = 0.0;  // latent arithmetic offset from day_open, in bps
  auto price_of = [&](double bps) {
    return detail::round_to_tick(day_open * (1.0 + bps / kBpsPerUnit), cfg.tick_size);
  };

  std::vector<std::int64_t> offsets;
  auto extended = [&](std::int64_t from_s, std::int64_t to_s, int n) {
    std::vector<std::int64_t> ts(static_cast<std::size_t>(n));
    const auto span_ns = static_cast<std::uint64_t>((to_s - from_s) * kNanosPerSecond);
    for (auto& v : ts) v = from_s * kNanosPerSecond + static_cast<std::int64_t>(uniform_index(rng, span_ns));
    std::sort(ts.begin(), ts.end());
    for (auto v : ts) {
      out.ticks.push_back({v, price_of(x_bps), detail::geometric_size(rng, cfg.mean_trade_size)});
    }
    out.extended_ticks += static_cast<std::size_t>(n);
  };

  const int pre = cfg.extended_ticks / 2;
  extended(out.session.open_s - 5400, out.session.open_s, pre);

  std::size_t next_burst = 0;
  double pinned_px = 0.0;
  for (std::int64_t s = 0; s < cfg.session_s; ++s) {
    while (next_burst < out.bursts.size() &&
           s >= out.bursts[next_burst].start_s + out.bursts[next_burst].len_s) {
      ++next_burst;
    }
    const Burst* b = next_burst < out.bursts.size() && s >= out.bursts[next_burst].start_s
                         ? &out.bursts[next_burst]
                         : nullptr;
    const std::int64_t into = b ? s - b->start_s : -1;
    const bool absorbing = b && into < cfg.absorb_s;
    const bool releasing = b && !absorbing;
    const std::int64_t sec_ns = (out.session.open_s + s) * kNanosPerSecond;

    const auto n_noise = static_cast<std::size_t>(poisson(rng, cfg.base_tick_rate));
    if (absorbing) {
      if (into == 0) pinned_px = price_of(x_bps);
      const auto n_inf = static_cast<std::size_t>(poisson(rng, cfg.informed_trades_per_s));
      detail::subsecond_offsets(rng, n_noise + n_inf, offsets);
      // Trades are interleaved at random; the informed clip grows with time.
      std::size_t informed_left = n_inf;
      std::size_t noise_left = n_noise;
      const std::int64_t clip = cfg.informed_clip + cfg.informed_clip_ramp * into;
      for (auto off : offsets) {
        const bool informed =
            uniform_index(rng, informed_left + noise_left) < informed_left;
        std::int64_t size;
        if (informed) {
          --informed_left;
          size = clip;
        } else {
          --noise_left;
          size = detail::geometric_size(rng, cfg.mean_trade_size);
        }
        out.ticks.push_back({sec_ns + off, pinned_px, size});
      }
      continue;
    }

    // Latent move for this second, spread linearly over its trades.
    double step = cfg.noise_vol_bps * standard_normal(rng);
    if (releasing) {
      const int dir = uniform01(rng) < cfg.sign_persistence ? b->sign : -b->sign;
      // Mean drift per second is burst_drift_bps_per_s once reversals are netted out.
      step += dir * cfg.burst_drift_bps_per_s / (2.0 * cfg.sign_persistence - 1.0);
    }
    detail::subsecond_offsets(rng, n_noise, offsets);
    for (std::size_t i = 0; i < n_noise; ++i) {
      const double frac = static_cast<double>(i + 1) / static_cast<double>(n_noise);
      out.ticks.push_back({sec_ns + offsets[i], price_of(x_bps + step * frac),
                           detail::geometric_size(rng, cfg.mean_trade_size)});
    }
    x_bps += step;
    // Keep the latent price well away from zero.
    x_bps = std::max(x_bps, -9000.0);
  }

  extended(out.session.close_s, out.session.close_s + 3600, cfg.extended_ticks - pre);
  out.session_ticks = out.ticks.size() - out.extended_ticks;
  return out;
}

struct SynthMarket {
  std::vector<SynthDay> days;
  BurstLog bursts;
};

inline SynthMarket generate_market(const SynthConfig& cfg, unsigned workers = 1) {
  cfg.validate();
  SynthMarket m;
  m.days.resize(static_cast<std::size_t>(cfg.n_days));
  parallel_for(m.days.size(), workers,
               [&](std::size_t d) { m.days[d] = generate_day(cfg, static_cast<int>(d)); });
  for (const auto& d : m.days) m.bursts.insert(m.bursts.end(), d.bursts.begin(), d.bursts.end());
  return m;
}

inline void write_burst_log(std::ostream& out, std::span<const Burst> bursts) {
  out << "day,start_s,len_s,sign\n";
  for (const auto& b : bursts) out << b.day << ',' << b.start_s << ',' << b.len_s << ',' << b.sign << '\n';
}

inline BurstLog read_burst_log(std::istream& in) {
  BurstLog log;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view v = detail::trim_cr(line);
    if (line_no == 1) {
      if (v != "day,start_s,len_s,sign") throw InputError("burst log header must be 'day,start_s,len_s,sign'");
      continue;
    }
    if (v.empty()) continue;
    Burst b;
    std::int64_t fields[4];
    std::size_t start = 0;
    for (int i = 0; i < 4; ++i) {
      const auto c = v.find(',', start);
      const auto f = v.substr(start, c == std::string_view::npos ? std::string_view::npos : c - start);
      if (!detail::parse_i64(f, fields[i]) || (i < 3 && c == std::string_view::npos)) {
        throw InputError("burst log: malformed line " + std::to_string(line_no));
      }
      start = c + 1;
    }
    b.day = static_cast<int>(fields[0]);
    b.start_s = fields[1];
    b.len_s = fields[2];
    b.sign = static_cast<int>(fields[3]);
    log.push_back(b);
  }
  return log;
}

}  // namespace ofe
