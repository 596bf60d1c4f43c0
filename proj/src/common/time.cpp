#include "mobmod/common/time.hpp"

#include <array>
#include <charconv>
#include <cstdio>

namespace mobmod {

namespace {

constexpr std::array<std::string_view, 12> kMonths = {
    "Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};

std::optional<int> to_int(std::string_view text) {
  int value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) return std::nullopt;
  return value;
}

}  // namespace

// Howard Hinnant's civil calendar algorithms.
std::int64_t days_from_civil(const CivilDate& date) {
  const std::int64_t y = date.year - (date.month <= 2 ? 1 : 0);
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const std::int64_t yoe = y - era * 400;
  const std::int64_t m = date.month;
  const std::int64_t doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + date.day - 1;
  const std::int64_t doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + doe - 719468;
}

CivilDate civil_from_days(std::int64_t days) {
  days += 719468;
  const std::int64_t era = (days >= 0 ? days : days - 146096) / 146097;
  const std::int64_t doe = days - era * 146097;
  const std::int64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const std::int64_t mp = (5 * doy + 2) / 153;
  const std::int64_t d = doy - (153 * mp + 2) / 5 + 1;
  const std::int64_t m = mp < 10 ? mp + 3 : mp - 9;
  const std::int64_t y = yoe + era * 400 + (m <= 2 ? 1 : 0);
  return CivilDate{static_cast<int>(y), static_cast<int>(m), static_cast<int>(d)};
}

std::int64_t day_index(Timestamp ts) {
  return ts >= 0 ? ts / kSecondsPerDay : -((-ts + kSecondsPerDay - 1) / kSecondsPerDay);
}

std::int64_t second_of_day(Timestamp ts) { return ts - day_index(ts) * kSecondsPerDay; }

std::string format_date(std::int64_t day) {
  const CivilDate c = civil_from_days(day);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", c.year, c.month, c.day);
  return buf;
}

std::optional<std::int64_t> parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  const auto y = to_int(text.substr(0, 4));
  const auto m = to_int(text.substr(5, 2));
  const auto d = to_int(text.substr(8, 2));
  if (!y || !m || !d || *m < 1 || *m > 12 || *d < 1 || *d > 31) return std::nullopt;
  const CivilDate date{*y, *m, *d};
  const std::int64_t days = days_from_civil(date);
  if (civil_from_days(days) != date) return std::nullopt;
  return days;
}

int weekday(std::int64_t day) {
  // 1970-01-01 was a Thursday.
  const std::int64_t w = (day + 3) % 7;
  return static_cast<int>(w < 0 ? w + 7 : w);
}

std::optional<int> month_from_abbrev(std::string_view abbrev) {
  for (std::size_t i = 0; i < kMonths.size(); ++i) {
    if (kMonths[i] == abbrev) return static_cast<int>(i) + 1;
  }
  return std::nullopt;
}

std::string_view month_abbrev(int month) {
  return kMonths.at(static_cast<std::size_t>(month - 1));
}

std::optional<int> parse_clock_minutes(std::string_view text) {
  if (text.size() != 5 && text.size() != 8) return std::nullopt;
  if (text[2] != ':') return std::nullopt;
  const auto h = to_int(text.substr(0, 2));
  const auto m = to_int(text.substr(3, 2));
  if (!h || !m || *h < 0 || *h > 24 || *m < 0 || *m > 59) return std::nullopt;
  if (*h == 24 && *m != 0) return std::nullopt;
  if (text.size() == 8) {
    if (text[5] != ':') return std::nullopt;
    const auto s = to_int(text.substr(6, 2));
    if (!s || *s < 0 || *s > 59) return std::nullopt;
  }
  return *h * 60 + *m;
}

std::string format_clock(std::int64_t second_of_day) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d:%02d:%02d",
                static_cast<int>(second_of_day / 3600),
                static_cast<int>(second_of_day / 60 % 60),
                static_cast<int>(second_of_day % 60));
  return buf;
}

}  // namespace mobmod
