#include "fbc/timestamp.hpp"

#include <charconv>
#include <cstdio>

#include "fbc/error.hpp"

namespace fbc {

namespace {

int digits(std::string_view text, std::size_t pos, std::size_t count) {
  int value = 0;
  if (pos + count > text.size()) throw Error(ErrorCode::kParseError, "truncated timestamp '" + std::string(text) + "'");
  const auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + count, value);
  if (ec != std::errc() || ptr != text.data() + pos + count)
    throw Error(ErrorCode::kParseError, "malformed timestamp '" + std::string(text) + "'");
  return value;
}

void expect(std::string_view text, std::size_t pos, char c) {
  if (pos >= text.size() || text[pos] != c)
    throw Error(ErrorCode::kParseError, "malformed timestamp '" + std::string(text) + "'");
}

int parse_offset(std::string_view text, std::size_t pos) {
  if (pos >= text.size())
    throw Error(ErrorCode::kParseError, "timestamp '" + std::string(text) + "' needs an explicit offset");
  if (text[pos] == 'Z' && pos + 1 == text.size()) return 0;
  if (text[pos] != '+' && text[pos] != '-')
    throw Error(ErrorCode::kParseError, "timestamp '" + std::string(text) + "' needs an explicit offset");
  const int sign = text[pos] == '-' ? -1 : 1;
  const int hh = digits(text, pos + 1, 2);
  expect(text, pos + 3, ':');
  const int mm = digits(text, pos + 4, 2);
  if (pos + 6 != text.size() || hh > 23 || mm > 59)
    throw Error(ErrorCode::kParseError, "malformed offset in '" + std::string(text) + "'");
  return sign * (hh * 60 + mm);
}

std::string format_local(Timestamp t) {
  const auto day = std::chrono::floor<std::chrono::days>(t);
  const std::chrono::year_month_day ymd{day};
  const std::chrono::hh_mm_ss hms{t - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
  const int year = digits(text, 0, 4);
  expect(text, 4, '-');
  const int month = digits(text, 5, 2);
  expect(text, 7, '-');
  const int day = digits(text, 8, 2);
  if (text.size() <= 10 || (text[10] != 'T' && text[10] != ' '))
    throw Error(ErrorCode::kParseError, "malformed timestamp '" + std::string(text) + "'");
  const int hour = digits(text, 11, 2);
  expect(text, 13, ':');
  const int minute = digits(text, 14, 2);
  std::size_t pos = 16;
  int second = 0;
  if (pos < text.size() && text[pos] == ':') {
    second = digits(text, pos + 1, 2);
    pos += 3;
  }
  const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                                        std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok() || hour > 23 || minute > 59 || second > 59)
    throw Error(ErrorCode::kParseError, "invalid date/time in '" + std::string(text) + "'");
  const int offset = parse_offset(text, pos);
  return std::chrono::sys_days{ymd} + std::chrono::hours{hour} + std::chrono::minutes{minute - offset} +
         std::chrono::seconds{second};
}

std::string format_utc(Timestamp t) { return format_local(t) + "Z"; }

int display_offset_minutes(std::string_view tz) {
  if (tz.empty() || tz == "UTC" || tz == "Z") return 0;
  if (tz == "CET") return 60;
  if (tz == "CEST" || tz == "EET") return 120;
  if (tz == "EEST") return 180;
  try {
    return parse_offset(tz, 0);
  } catch (const Error&) {
    throw Error(ErrorCode::kValidationError, "unsupported time zone '" + std::string(tz) + "'");
  }
}

std::string format_in_zone(Timestamp t, std::string_view tz) {
  const int offset = display_offset_minutes(tz);
  if (offset == 0) return format_utc(t);
  char buf[16];
  const int a = offset < 0 ? -offset : offset;
  std::snprintf(buf, sizeof buf, "%c%02d:%02d", offset < 0 ? '-' : '+', a / 60, a % 60);
  return format_local(t + std::chrono::minutes{offset}) + buf;
}

}  // namespace fbc
