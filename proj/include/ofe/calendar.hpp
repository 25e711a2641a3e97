#pragma once

#include <charconv>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "ofe/common.hpp"

namespace ofe {

struct Date {
  int year = 1970;
  int month = 1;
  int day = 1;

  auto operator<=>(const Date&) const = default;
};

// Days since 1970-01-01 (proleptic Gregorian), H. Hinnant's algorithm.
inline constexpr std::int64_t days_from_civil(Date d) {
  const int y = d.year - (d.month <= 2);
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned mp = static_cast<unsigned>(d.month + (d.month > 2 ? -3 : 9));
  const unsigned doy = (153 * mp + 2) / 5 + static_cast<unsigned>(d.day) - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline constexpr Date civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const int y = static_cast<int>(yoe) + static_cast<int>(era) * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  return Date{y + (m <= 2), static_cast<int>(m), static_cast<int>(d)};
}

// 0 = Sunday ... 6 = Saturday.
inline constexpr int weekday(Date d) {
  const std::int64_t z = days_from_civil(d);
  return static_cast<int>(z >= -4 ? (z + 4) % 7 : (z + 5) % 7 + 6);
}

inline constexpr Date add_days(Date d, std::int64_t n) {
  return civil_from_days(days_from_civil(d) + n);
}

inline std::vector<Date> trading_days(Date start, int count) {
  std::vector<Date> out;
  Date d = start;
  while (static_cast<int>(out.size()) < count) {
    const int wd = weekday(d);
    if (wd != 0 && wd != 6) out.push_back(d);
    d = add_days(d, 1);
  }
  return out;
}

// US Eastern offset from UTC in seconds for a local wall-clock time on `d`
// (rules in force since 2007: DST from 02:00 on the second Sunday of March to
// 02:00 on the first Sunday of November).
inline constexpr int eastern_utc_offset_s(Date d, int local_second_of_day) {
  auto nth_sunday = [](int year, int month, int n) {
    const Date first{year, month, 1};
    const int wd = weekday(first);
    return Date{year, month, 1 + (7 - wd) % 7 + 7 * (n - 1)};
  };
  const Date dst_start = nth_sunday(d.year, 3, 2);
  const Date dst_end = nth_sunday(d.year, 11, 1);
  bool dst = d > dst_start && d < dst_end;
  if (d == dst_start) dst = local_second_of_day >= 2 * 3600;
  if (d == dst_end) dst = local_second_of_day < 2 * 3600;
  return dst ? -4 * 3600 : -5 * 3600;
}

// Epoch seconds of a US Eastern wall-clock time.
inline constexpr std::int64_t eastern_to_epoch_s(Date d, int local_second_of_day) {
  return days_from_civil(d) * 86400 + local_second_of_day -
         eastern_utc_offset_s(d, local_second_of_day);
}

inline std::string to_string(Date d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", d.year, d.month, d.day);
  return buf;
}

inline Date parse_date(std::string_view s) {
  Date d;
  auto field = [&](std::size_t pos, std::size_t len, int& out) {
    if (pos + len > s.size()) return false;
    auto [p, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, out);
    return ec == std::errc{} && p == s.data() + pos + len;
  };
  if (s.size() != 10 || s[4] != '-' || s[7] != '-' || !field(0, 4, d.year) ||
      !field(5, 2, d.month) || !field(8, 2, d.day) || d.month < 1 || d.month > 12 ||
      d.day < 1 || d.day > 31 || civil_from_days(days_from_civil(d)) != d) {
    throw InputError("invalid date '" + std::string(s) + "' (expected YYYY-MM-DD)");
  }
  return d;
}

}  // namespace ofe
