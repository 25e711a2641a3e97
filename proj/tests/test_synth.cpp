#include <gtest/gtest.h>

#include <sstream>

#include "ofe/oracle.hpp"
#include "ofe/stats.hpp"
#include "ofe/synth.hpp"

using namespace ofe;

namespace {

SynthConfig small_config() {
  SynthConfig c;
  c.seed = 21;
  c.n_days = 4;
  c.session_s = 5400;
  c.burst_rate = 24;
  return c;
}

}  // namespace

TEST(Synth, ReproducibleAndWorkerIndependent) {
  const auto a = generate_market(small_config(), 1);
  const auto b = generate_market(small_config(), 3);
  ASSERT_EQ(a.days.size(), b.days.size());
  for (std::size_t d = 0; d < a.days.size(); ++d) {
    ASSERT_EQ(a.days[d].ticks.size(), b.days[d].ticks.size());
    for (std::size_t i = 0; i < a.days[d].ticks.size(); ++i) {
      ASSERT_EQ(a.days[d].ticks[i].ts_ns, b.days[d].ticks[i].ts_ns);
      ASSERT_EQ(a.days[d].ticks[i].price, b.days[d].ticks[i].price);
      ASSERT_EQ(a.days[d].ticks[i].size, b.days[d].ticks[i].size);
    }
  }
  EXPECT_EQ(a.bursts, b.bursts);
  auto other = small_config();
  other.seed = 22;
  EXPECT_NE(generate_market(other).days[0].ticks.size(), a.days[0].ticks.size());
}

TEST(Synth, TicksAreWellFormed) {
  const auto cfg = small_config();
  const auto m = generate_market(cfg);
  for (const auto& d : m.days) {
    EXPECT_EQ(d.session.length_s(), cfg.session_s);
    std::size_t inside = 0;
    for (std::size_t i = 0; i < d.ticks.size(); ++i) {
      const auto& t = d.ticks[i];
      ASSERT_GT(t.price, 0.0);
      ASSERT_GE(t.size, 1);
      ASSERT_NEAR(t.price / cfg.tick_size, std::round(t.price / cfg.tick_size), 1e-6);
      if (i) {
        ASSERT_GE(t.ts_ns, d.ticks[i - 1].ts_ns);
      }
      const std::int64_t s = t.ts_ns / kNanosPerSecond;
      inside += s >= d.session.open_s && s < d.session.close_s;
    }
    EXPECT_EQ(inside, d.session_ticks);
    EXPECT_EQ(d.ticks.size() - inside, static_cast<std::size_t>(cfg.extended_ticks));
    // Roughly base_tick_rate noise trades per second plus informed flow.
    EXPECT_GT(static_cast<double>(inside), 0.8 * cfg.base_tick_rate * static_cast<double>(cfg.session_s));
  }
}

TEST(Synth, BurstScheduleRespectsGaps) {
  auto cfg = small_config();
  cfg.session_s = 23'400;
  cfg.burst_rate = 50;
  for (int day = 0; day < 50; ++day) {
    auto rng = make_stream(cfg.seed, static_cast<std::uint64_t>(day), 1);
    const auto bursts = schedule_bursts(cfg, day, rng);
    for (std::size_t i = 0; i < bursts.size(); ++i) {
      const auto& b = bursts[i];
      EXPECT_GE(b.start_s, cfg.min_gap_s);
      EXPECT_LT(b.start_s + b.len_s, cfg.session_s);
      EXPECT_TRUE(b.sign == 1 || b.sign == -1);
      if (i) {
        const auto gap = b.start_s - (bursts[i - 1].start_s + bursts[i - 1].len_s);
        EXPECT_GE(gap, cfg.cluster_gap_s);
        if (i % cfg.cluster_size == 0) {
          EXPECT_GE(gap, cfg.min_gap_s);
        }
      }
    }
  }
}

TEST(Synth, BurstSignsAreBalanced) {
  auto cfg = small_config();
  cfg.session_s = 23'400;
  cfg.burst_rate = 50;
  std::int64_t up = 0;
  std::int64_t n = 0;
  for (int day = 0; day < 200; ++day) {
    auto rng = make_stream(cfg.seed, static_cast<std::uint64_t>(day), 1);
    for (const auto& b : schedule_bursts(cfg, day, rng)) {
      up += b.sign > 0;
      ++n;
    }
  }
  ASSERT_GT(n, 5000);
  EXPECT_LT(std::abs(binomial_direction(up, n).z), 3.5);
}

TEST(Synth, NoBurstsMeansNoBurstLog) {
  auto cfg = small_config();
  cfg.burst_rate = 0;
  const auto m = generate_market(cfg);
  EXPECT_TRUE(m.bursts.empty());
  EXPECT_THROW(([] {
                 auto c = small_config();
                 c.sign_persistence = 0.4;
                 c.validate();
               }()),
               InputError);
}

TEST(Synth, ReleaseMovesWithBurstSign) {
  const auto cfg = small_config();
  const auto m = generate_market(cfg);
  double aligned = 0.0;
  int count = 0;
  for (const auto& d : m.days) {
    const auto bars = ticks_to_bars(d.ticks, d.session);
    for (const auto& b : d.bursts) {
      const auto from = bar_at_or_before(bars, d.session.open_s + b.start_s + cfg.absorb_s);
      const auto to = bar_at_or_before(bars, d.session.open_s + b.start_s + b.len_s);
      if (from < 0 || to <= from) continue;
      aligned += b.sign * log_return_bps(bars[static_cast<std::size_t>(from)].close, bars[static_cast<std::size_t>(to)].close);
      ++count;
    }
  }
  ASSERT_GT(count, 20);
  // Expected drift over the release: 45 s x 0.8 bps/s x (2p - 1) persistence.
  EXPECT_GT(aligned / count, 10.0);
}

TEST(Synth, BurstLogRoundTrip) {
  const auto m = generate_market(small_config());
  std::stringstream buf;
  write_burst_log(buf, m.bursts);
  EXPECT_EQ(read_burst_log(buf), m.bursts);
  std::istringstream bad("day,start_s,len_s,sign\n1,2,3\n");
  EXPECT_THROW(read_burst_log(bad), InputError);
}

TEST(Oracle, LowEntropyConcentratesInBursts) {
  // Burst density of a full session: about 50 per 23,400 s.
  auto cfg = small_config();
  cfg.burst_rate = 12;
  const auto m = generate_market(cfg, 4);
  std::vector<SessionData> ss;
  for (const auto& d : m.days) ss.push_back(build_session(d.session, d.ticks, EntropyConfig{}));
  const auto r = oracle_report(label_entropy(ss, m.bursts), 0.05, 1);
  ASSERT_TRUE(r.split_defined);
  EXPECT_LT(r.mean_h_inside, r.mean_h_outside);
  EXPECT_GT(r.precision, 2.0 * r.base_rate);
  EXPECT_NEAR(r.shuffled_precision, r.base_rate, 0.1);
}
