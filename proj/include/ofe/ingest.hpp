#pragma once

// Tick parsing, regular-hours filtering and one-second bar aggregation.
//
// Tick CSV:  header `ts_ns,price,size`, one trade per line, ts_ns an integer
//            count of nanoseconds since the Unix epoch (UTC), price a decimal
//            with '.' as separator, size a positive integer.
// Bar CSV:   header `ts_s,close,volume`.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ofe/calendar.hpp"
#include "ofe/common.hpp"

namespace ofe {

inline constexpr std::int64_t kNanosPerSecond = 1'000'000'000;
inline constexpr int kRegularOpenLocal = 9 * 3600 + 30 * 60;
inline constexpr int kRegularCloseLocal = 16 * 3600;
inline constexpr std::int64_t kMaxSessionSeconds = 23'400;

struct TickRecord {
  std::int64_t ts_ns = 0;
  double price = 0.0;
  std::int64_t size = 0;

  bool operator==(const TickRecord&) const = default;
};

struct SecondBar {
  std::int64_t ts_s = 0;
  double close = 0.0;
  std::int64_t volume = 0;

  bool operator==(const SecondBar&) const = default;
};

struct SessionSpec {
  Date date;
  std::int64_t open_s = 0;
  std::int64_t close_s = 0;

  std::int64_t length_s() const { return close_s - open_s; }

  void validate() const {
    if (open_s >= close_s) throw InputError("session open must precede close");
    if (length_s() > kMaxSessionSeconds) {
      throw InputError("session longer than 23,400 seconds");
    }
  }

  // 09:30-16:00 America/New_York on `date`.
  static SessionSpec regular_hours(Date date) {
    SessionSpec s{date, eastern_to_epoch_s(date, kRegularOpenLocal),
                  eastern_to_epoch_s(date, kRegularCloseLocal)};
    return s;
  }

  // Session starting at the regular open and lasting `length_s` seconds.
  static SessionSpec from_open(Date date, std::int64_t length_s) {
    const auto open = eastern_to_epoch_s(date, kRegularOpenLocal);
    SessionSpec s{date, open, open + length_s};
    s.validate();
    return s;
  }
};

struct RowError {
  std::size_t line = 0;
  std::string message;
};

struct TickParseResult {
  std::vector<TickRecord> ticks;
  std::vector<RowError> errors;
  std::size_t rows = 0;
};

namespace detail {

inline bool parse_i64(std::string_view s, std::int64_t& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size();
}

inline bool parse_f64(std::string_view s, double& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out,
                                 std::chars_format::fixed);
  return ec == std::errc{} && p == s.data() + s.size();
}

inline std::string_view trim_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

// Splits exactly three comma-separated fields.
inline bool split3(std::string_view line, std::string_view (&f)[3]) {
  const auto a = line.find(',');
  if (a == std::string_view::npos) return false;
  const auto b = line.find(',', a + 1);
  if (b == std::string_view::npos || line.find(',', b + 1) != std::string_view::npos) {
    return false;
  }
  f[0] = line.substr(0, a);
  f[1] = line.substr(a + 1, b - a - 1);
  f[2] = line.substr(b + 1);
  return true;
}

inline void append_price(std::string& out, double px) {
  char buf[48];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, px, std::chars_format::fixed, 4);
  out.append(buf, p);
}

inline void append_int(std::string& out, std::int64_t v) {
  char buf[24];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, p);
}

}  // namespace detail

// Streams tick rows to `sink`. Rows with a non-positive price or size, a bad
// field count or an unparsable number become RowErrors (with 1-based line
// numbers) and are skipped. A timestamp that steps back by more than one
// second is treated as a corrupt feed and throws; smaller regressions are
// reported as row errors.
template <typename Sink>
std::size_t for_each_tick(std::istream& in, Sink&& sink, std::vector<RowError>& errors) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t rows = 0;
  std::int64_t last_ts = INT64_MIN;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = detail::trim_cr(line);
    if (line_no == 1) {
      if (view != "ts_ns,price,size") {
        throw InputError("tick file header must be 'ts_ns,price,size'");
      }
      continue;
    }
    if (view.empty()) continue;
    ++rows;
    std::string_view f[3];
    TickRecord t;
    if (!detail::split3(view, f)) {
      errors.push_back({line_no, "expected 3 fields"});
      continue;
    }
    if (!detail::parse_i64(f[0], t.ts_ns) || !detail::parse_f64(f[1], t.price) ||
        !detail::parse_i64(f[2], t.size)) {
      errors.push_back({line_no, "unparsable field"});
      continue;
    }
    if (!(t.price > 0.0)) {
      errors.push_back({line_no, "non-positive price"});
      continue;
    }
    if (t.size < 1) {
      errors.push_back({line_no, "non-positive size"});
      continue;
    }
    if (t.ts_ns < last_ts) {
      if (last_ts - t.ts_ns > kNanosPerSecond) {
        throw InputError("timestamp regression beyond 1 s at line " +
                         std::to_string(line_no) + " (corrupt feed)");
      }
      errors.push_back({line_no, "timestamp regression"});
      continue;
    }
    last_ts = t.ts_ns;
    sink(t);
  }
  return rows;
}

inline TickParseResult parse_ticks(std::istream& in) {
  TickParseResult r;
  r.rows = for_each_tick(in, [&](const TickRecord& t) { r.ticks.push_back(t); }, r.errors);
  return r;
}

inline TickParseResult parse_ticks(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open tick file: " + path);
  if (in.peek() == std::char_traits<char>::eof()) return {};
  return parse_ticks(in);
}

inline void write_ticks(std::ostream& out, std::span<const TickRecord> ticks) {
  std::string buf = "ts_ns,price,size\n";
  buf.reserve(ticks.size() * 36 + buf.size());
  for (const auto& t : ticks) {
    detail::append_int(buf, t.ts_ns);
    buf.push_back(',');
    detail::append_price(buf, t.price);
    buf.push_back(',');
    detail::append_int(buf, t.size);
    buf.push_back('\n');
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

inline void write_ticks(const std::string& path, std::span<const TickRecord> ticks) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write tick file: " + path);
  write_ticks(out, ticks);
}

struct FilterResult {
  std::vector<TickRecord> kept;
  std::size_t dropped = 0;
};

// Keeps ticks with open_s <= ts < close_s.
inline FilterResult filter_session(std::span<const TickRecord> ticks, const SessionSpec& s) {
  FilterResult r;
  const std::int64_t lo = s.open_s * kNanosPerSecond;
  const std::int64_t hi = s.close_s * kNanosPerSecond;
  r.kept.reserve(ticks.size());
  for (const auto& t : ticks) {
    if (t.ts_ns >= lo && t.ts_ns < hi) {
      r.kept.push_back(t);
    } else {
      ++r.dropped;
    }
  }
  return r;
}

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

// One bar per second holding at least one tick. The close is the last tick
// of the second in input order; empty seconds produce no bar.
inline std::vector<SecondBar> aggregate_bars(std::span<const TickRecord> ticks) {
  std::vector<SecondBar> bars;
  for (const auto& t : ticks) {
    const std::int64_t s = floor_div(t.ts_ns, kNanosPerSecond);
    if (!bars.empty() && bars.back().ts_s == s) {
      bars.back().close = t.price;
      bars.back().volume += t.size;
    } else {
      bars.push_back({s, t.price, t.size});
    }
  }
  return bars;
}

inline std::vector<SecondBar> ticks_to_bars(std::span<const TickRecord> ticks,
                                            const SessionSpec& session,
                                            std::size_t* dropped = nullptr) {
  auto f = filter_session(ticks, session);
  if (dropped) *dropped = f.dropped;
  return aggregate_bars(f.kept);
}

inline void write_bars(std::ostream& out, std::span<const SecondBar> bars) {
  std::string buf = "ts_s,close,volume\n";
  for (const auto& b : bars) {
    detail::append_int(buf, b.ts_s);
    buf.push_back(',');
    detail::append_price(buf, b.close);
    buf.push_back(',');
    detail::append_int(buf, b.volume);
    buf.push_back('\n');
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

inline void write_bars(const std::string& path, std::span<const SecondBar> bars) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write bar file: " + path);
  write_bars(out, bars);
}

inline std::vector<SecondBar> read_bars(std::istream& in, const std::string& name = "bars") {
  std::vector<SecondBar> bars;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = detail::trim_cr(line);
    if (line_no == 1) {
      if (view != "ts_s,close,volume") {
        throw InputError(name + ": header must be 'ts_s,close,volume'");
      }
      continue;
    }
    if (view.empty()) continue;
    std::string_view f[3];
    SecondBar b;
    if (!detail::split3(view, f) || !detail::parse_i64(f[0], b.ts_s) ||
        !detail::parse_f64(f[1], b.close) || !detail::parse_i64(f[2], b.volume) ||
        !(b.close > 0.0) || b.volume < 1) {
      throw InputError(name + ": malformed bar at line " + std::to_string(line_no));
    }
    if (!bars.empty() && b.ts_s <= bars.back().ts_s) {
      throw InputError(name + ": bar timestamps not strictly increasing at line " +
                       std::to_string(line_no));
    }
    bars.push_back(b);
  }
  return bars;
}

inline std::vector<SecondBar> read_bars(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open bar file: " + path);
  if (in.peek() == std::char_traits<char>::eof()) return {};
  return read_bars(in, path);
}

}  // namespace ofe
