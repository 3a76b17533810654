#pragma once

// RFC-4180 reading/writing and locale-independent number conversion.

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace fbc::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;  // 1-based source line of each row

  /// Column index by name; throws ParseError naming `source` when absent.
  std::size_t column(std::string_view name, std::string_view source) const;
};

/// Quoted fields may contain commas, quotes ("") and line breaks. Blank
/// lines are skipped. Every row must have as many fields as the header.
Table read(std::istream& in, std::string_view source);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

/// Shortest representation that parses back to the same double.
std::string format_number(double value);

/// Strict full-field parse; throws ParseError with `context`.
double parse_number(std::string_view text, std::string_view context);

}  // namespace fbc::csv
