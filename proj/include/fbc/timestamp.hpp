#pragma once

// ISO-8601 timestamps with explicit offsets, stored as UTC seconds.

#include <chrono>
#include <string>
#include <string_view>

namespace fbc {

using Timestamp = std::chrono::sys_seconds;

/// Accepts "YYYY-MM-DDTHH:MM[:SS](Z|+HH:MM|-HH:MM)". Throws ParseError.
Timestamp parse_timestamp(std::string_view text);

/// Canonical UTC form "YYYY-MM-DDTHH:MM:SSZ".
std::string format_utc(Timestamp t);

/// Offset in minutes for a display zone: "UTC", "Z", "CET" (+01:00),
/// "CEST" (+02:00), "EET" (+02:00), "EEST" (+03:00) or a literal
/// "+HH:MM"/"-HH:MM". Throws ValidationError for anything else.
int display_offset_minutes(std::string_view tz);

/// Local wall-clock rendering with the offset appended, e.g.
/// "2024-11-06T17:00:00+01:00".
std::string format_in_zone(Timestamp t, std::string_view tz);

}  // namespace fbc
