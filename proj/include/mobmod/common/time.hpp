#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace mobmod {

/// Seconds since the Unix epoch. Syslog clock readings carry no zone, so
/// local wall-clock time is stored as if it were UTC.
using Timestamp = std::int64_t;

inline constexpr std::int64_t kSecondsPerDay = 86400;

struct CivilDate {
  int year = 1970;
  int month = 1;
  int day = 1;

  auto operator<=>(const CivilDate&) const = default;
};

/// Days since 1970-01-01 for a proleptic Gregorian date.
std::int64_t days_from_civil(const CivilDate& date);
CivilDate civil_from_days(std::int64_t days);

/// Day index of a timestamp (floor division).
std::int64_t day_index(Timestamp ts);
/// Seconds since local midnight.
std::int64_t second_of_day(Timestamp ts);

/// "YYYY-MM-DD".
std::string format_date(std::int64_t day);
std::optional<std::int64_t> parse_date(std::string_view text);

/// Day of week with 0 = Monday.
int weekday(std::int64_t day);

/// Three-letter English month abbreviation ("Jan".."Dec") to 1..12.
std::optional<int> month_from_abbrev(std::string_view abbrev);
std::string_view month_abbrev(int month);

/// "hh:mm" or "hh:mm:ss" to minutes (seconds ignored) past midnight.
std::optional<int> parse_clock_minutes(std::string_view text);
std::string format_clock(std::int64_t second_of_day);

}  // namespace mobmod
