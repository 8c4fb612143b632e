#include "newsflow/date.hpp"

#include <cctype>
#include <cstdio>

#include "newsflow/error.hpp"

namespace newsflow {

namespace {

using std::chrono::day;
using std::chrono::month;
using std::chrono::months;
using std::chrono::sys_days;
using std::chrono::year;
using std::chrono::year_month_day;

bool read_digits(std::string_view text, std::size_t& pos, std::size_t count, int& out) {
  if (pos + count > text.size()) return false;
  int value = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const char c = text[pos + i];
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    value = value * 10 + (c - '0');
  }
  pos += count;
  out = value;
  return true;
}

[[noreturn]] void bad_timestamp(std::string_view text) {
  throw DataError("invalid timestamp '" + std::string(text) + "'");
}

Date parse_date_prefix(std::string_view text, std::size_t& pos) {
  int y = 0, m = 0, d = 0;
  if (!read_digits(text, pos, 4, y) || pos >= text.size() || text[pos++] != '-' ||
      !read_digits(text, pos, 2, m) || pos >= text.size() || text[pos++] != '-' ||
      !read_digits(text, pos, 2, d)) {
    bad_timestamp(text);
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(m)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) bad_timestamp(text);
  return Date::from_days(
      static_cast<std::int32_t>(sys_days{ymd}.time_since_epoch().count()));
}

}  // namespace

Date Date::from_ymd(int y, unsigned m, unsigned d) {
  const year_month_day ymd{year{y}, month{m}, day{d}};
  if (!ymd.ok()) {
    throw ConfigError("invalid calendar date " + std::to_string(y) + "-" +
                      std::to_string(m) + "-" + std::to_string(d));
  }
  return Date(static_cast<std::int32_t>(sys_days{ymd}.time_since_epoch().count()));
}

year_month_day Date::ymd() const { return year_month_day{sys_days{std::chrono::days{days_}}}; }

Date Date::add_months(int n) const {
  year_month_day shifted = ymd() + months{n};
  if (!shifted.ok()) {
    shifted = shifted.year() / shifted.month() / std::chrono::last;
  }
  return Date(static_cast<std::int32_t>(sys_days{shifted}.time_since_epoch().count()));
}

std::string Date::iso() const {
  const auto v = ymd();
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(v.year()),
                static_cast<unsigned>(v.month()), static_cast<unsigned>(v.day()));
  return buf;
}

Date parse_date(std::string_view text) {
  std::size_t pos = 0;
  const Date d = parse_date_prefix(text, pos);
  if (pos != text.size()) bad_timestamp(text);
  return d;
}

Date parse_timestamp(std::string_view text, std::chrono::minutes local_offset) {
  std::size_t pos = 0;
  const Date date = parse_date_prefix(text, pos);
  if (pos == text.size()) return date;

  if (text[pos] != 'T' && text[pos] != ' ') bad_timestamp(text);
  ++pos;
  int hh = 0, mm = 0, ss = 0;
  if (!read_digits(text, pos, 2, hh) || pos >= text.size() || text[pos++] != ':' ||
      !read_digits(text, pos, 2, mm)) {
    bad_timestamp(text);
  }
  if (pos < text.size() && text[pos] == ':') {
    ++pos;
    if (!read_digits(text, pos, 2, ss)) bad_timestamp(text);
    if (pos < text.size() && (text[pos] == '.' || text[pos] == ',')) {
      ++pos;
      const std::size_t start = pos;
      while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
      if (pos == start) bad_timestamp(text);
    }
  }
  if (hh > 24 || mm > 59 || ss > 60) bad_timestamp(text);

  int offset_minutes = 0;
  if (pos < text.size()) {
    const char sign = text[pos++];
    if (sign == 'Z' || sign == 'z') {
      if (pos != text.size()) bad_timestamp(text);
    } else if (sign == '+' || sign == '-') {
      int oh = 0, om = 0;
      if (!read_digits(text, pos, 2, oh)) bad_timestamp(text);
      if (pos < text.size() && text[pos] == ':') ++pos;
      if (pos < text.size() && !read_digits(text, pos, 2, om)) bad_timestamp(text);
      if (pos != text.size() || oh > 23 || om > 59) bad_timestamp(text);
      offset_minutes = (sign == '+' ? 1 : -1) * (oh * 60 + om);
    } else {
      bad_timestamp(text);
    }
  }

  // Minutes since local midnight of `date`, converted to UTC then to the
  // configured zone.
  const long long minutes = static_cast<long long>(date.days_since_epoch()) * 1440 +
                            hh * 60 + mm - offset_minutes + local_offset.count();
  long long day_index = minutes / 1440;
  if (minutes % 1440 < 0) --day_index;
  return Date::from_days(static_cast<std::int32_t>(day_index));
}

}  // namespace newsflow
