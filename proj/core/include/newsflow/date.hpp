#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace newsflow {

/// Calendar date with day resolution, stored as days since 1970-01-01.
class Date {
 public:
  constexpr Date() = default;

  /// Throws ConfigError when the triple is not a valid proleptic Gregorian date.
  static Date from_ymd(int year, unsigned month, unsigned day);
  static constexpr Date from_days(std::int32_t days) { return Date(days); }

  constexpr std::int32_t days_since_epoch() const { return days_; }
  std::chrono::year_month_day ymd() const;

  constexpr Date add_days(std::int32_t n) const { return Date(days_ + n); }
  /// Adds calendar months; the day of month is clamped to the target month's
  /// last day (Jan 31 + 1 month = Feb 28/29).
  Date add_months(int n) const;

  /// ISO-8601 "YYYY-MM-DD".
  std::string iso() const;

  friend constexpr auto operator<=>(Date, Date) = default;

 private:
  constexpr explicit Date(std::int32_t days) : days_(days) {}
  std::int32_t days_ = 0;
};

/// Strict "YYYY-MM-DD". Throws DataError.
Date parse_date(std::string_view text);

/// ISO-8601 date or datetime ("2003-01-02", "2003-01-02T13:45:00Z",
/// "2003-01-02 13:45:00+09:00", fractional seconds allowed). A datetime is
/// converted to UTC using its offset (none means UTC), shifted by
/// `local_offset`, then truncated to the calendar date. Throws DataError.
Date parse_timestamp(std::string_view text,
                     std::chrono::minutes local_offset = std::chrono::minutes{0});

/// Closed interval of calendar days.
struct DateRange {
  Date first;
  Date last;

  bool contains(Date d) const { return first <= d && d <= last; }
  bool empty() const { return last < first; }
  std::int32_t day_count() const {
    return empty() ? 0 : last.days_since_epoch() - first.days_since_epoch() + 1;
  }
  friend bool operator==(const DateRange&, const DateRange&) = default;
};

}  // namespace newsflow
