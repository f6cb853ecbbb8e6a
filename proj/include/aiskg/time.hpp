#pragma once

// UTC calendar helpers. All time math in the library is UTC, seconds since epoch.

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace aiskg {

using UnixSeconds = std::int64_t;

struct CivilTime {
  int year = 1970;
  unsigned month = 1;   // 1-12
  unsigned day = 1;     // 1-31
  unsigned hour = 0;    // 0-23
  unsigned minute = 0;
  unsigned second = 0;
  unsigned weekday = 3;  // Monday = 0
  unsigned days_in_month = 31;
};

inline std::int64_t days_since_epoch(UnixSeconds t) {
  return t >= 0 ? t / 86400 : -((-t + 86399) / 86400);
}

inline CivilTime to_civil(UnixSeconds t) {
  using namespace std::chrono;
  const std::int64_t days = days_since_epoch(t);
  const std::int64_t secs = t - days * 86400;
  const sys_days sd{std::chrono::days{days}};
  const year_month_day ymd{sd};
  const year_month_day_last last{ymd.year(), month_day_last{ymd.month()}};
  CivilTime c;
  c.year = static_cast<int>(ymd.year());
  c.month = static_cast<unsigned>(ymd.month());
  c.day = static_cast<unsigned>(ymd.day());
  c.hour = static_cast<unsigned>(secs / 3600);
  c.minute = static_cast<unsigned>((secs % 3600) / 60);
  c.second = static_cast<unsigned>(secs % 60);
  c.weekday = weekday{sd}.iso_encoding() - 1;
  c.days_in_month = static_cast<unsigned>(last.day());
  return c;
}

inline UnixSeconds from_civil(int year, unsigned month, unsigned day, unsigned hour = 0, unsigned minute = 0,
                              unsigned second = 0) {
  using namespace std::chrono;
  const sys_days sd{std::chrono::year{year} / std::chrono::month{month} / std::chrono::day{day}};
  return static_cast<UnixSeconds>(sd.time_since_epoch().count()) * 86400 + hour * 3600 + minute * 60 + second;
}

namespace detail {

inline bool parse_uint(std::string_view s, unsigned& out) {
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size();
}

// "YYYY-MM-DD[Thh:mm[:ss[.fff]]][Z|+hh:mm|-hh:mm]"; a space may replace 'T'.
inline std::optional<UnixSeconds> parse_iso8601(std::string_view s) {
  if (s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  unsigned y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  if (!parse_uint(s.substr(0, 4), y) || !parse_uint(s.substr(5, 2), mo) || !parse_uint(s.substr(8, 2), d)) {
    return std::nullopt;
  }
  std::string_view rest = s.substr(10);
  if (!rest.empty() && (rest[0] == 'T' || rest[0] == ' ')) {
    rest.remove_prefix(1);
    if (rest.size() < 5 || rest[2] != ':') return std::nullopt;
    if (!parse_uint(rest.substr(0, 2), h) || !parse_uint(rest.substr(3, 2), mi)) return std::nullopt;
    rest.remove_prefix(5);
    if (!rest.empty() && rest[0] == ':') {
      if (rest.size() < 3 || !parse_uint(rest.substr(1, 2), sec)) return std::nullopt;
      rest.remove_prefix(3);
      if (!rest.empty() && rest[0] == '.') {
        rest.remove_prefix(1);
        while (!rest.empty() && rest[0] >= '0' && rest[0] <= '9') rest.remove_prefix(1);
      }
    }
  }
  std::int64_t offset = 0;
  if (!rest.empty()) {
    if (rest == "Z" || rest == "z") {
      rest = {};
    } else if ((rest[0] == '+' || rest[0] == '-') && rest.size() == 6 && rest[3] == ':') {
      unsigned oh = 0, om = 0;
      if (!parse_uint(rest.substr(1, 2), oh) || !parse_uint(rest.substr(4, 2), om)) return std::nullopt;
      offset = (rest[0] == '+' ? 1 : -1) * static_cast<std::int64_t>(oh * 3600 + om * 60);
    } else {
      return std::nullopt;
    }
  }
  if (mo < 1 || mo > 12 || h > 23 || mi > 59 || sec > 60) return std::nullopt;
  using namespace std::chrono;
  const year_month_day ymd{year{static_cast<int>(y)}, month{mo}, day{d}};
  if (!ymd.ok()) return std::nullopt;
  return from_civil(static_cast<int>(y), mo, d, h, mi, sec) - offset;
}

}  // namespace detail

/// Accepts ISO-8601 (UTC or with offset) or epoch seconds (fraction truncated).
inline std::optional<UnixSeconds> parse_timestamp(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '"' || s.back() == '\r')) s.remove_suffix(1);
  if (s.empty()) return std::nullopt;
  if (s.size() >= 10 && s[4] == '-') return detail::parse_iso8601(s);
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return static_cast<UnixSeconds>(std::floor(v));
}

inline std::string format_iso8601(UnixSeconds t) {
  const CivilTime c = to_civil(t);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02u:%02u:%02uZ", c.year, c.month, c.day, c.hour, c.minute,
                c.second);
  return buf;
}

}  // namespace aiskg
