#include "fbc/csv.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>

#include "fbc/error.hpp"

namespace fbc::csv {

std::size_t Table::column(std::string_view name, std::string_view source) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw Error(ErrorCode::kParseError, std::string(source) + ": missing column '" + std::string(name) + "'");
}

Table read(std::istream& in, std::string_view source) {
  Table table;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false, field_started = false, any = false;
  std::size_t line = 1, record_line = 1;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    if (!any) return;  // blank line
    end_field();
    if (table.header.empty() && table.rows.empty() && table.lines.empty()) {
      table.header = std::move(record);
    } else {
      if (record.size() != table.header.size())
        throw Error(ErrorCode::kParseError, std::string(source) + ":" + std::to_string(record_line) + ": expected " +
                                                std::to_string(table.header.size()) + " fields, found " +
                                                std::to_string(record.size()));
      table.rows.push_back(std::move(record));
      table.lines.push_back(record_line);
    }
    record.clear();
    any = false;
  };

  char c;
  while (in.get(c)) {
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started)
          throw Error(ErrorCode::kParseError, std::string(source) + ":" + std::to_string(line) +
                                                  ": quote inside an unquoted field");
        in_quotes = field_started = any = true;
        break;
      case ',':
        any = true;
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        record_line = ++line;
        break;
      default:
        if (!any) record_line = line;
        field.push_back(c);
        field_started = any = true;
    }
  }
  if (in_quotes) throw Error(ErrorCode::kParseError, std::string(source) + ": unterminated quoted field");
  end_record();
  return table;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    const std::string& f = fields[i];
    if (f.find_first_of(",\"\r\n") == std::string::npos) {
      out << f;
      continue;
    }
    out << '"';
    for (char ch : f) {
      if (ch == '"') out << '"';
      out << ch;
    }
    out << '"';
  }
  out << "\r\n";
}

std::string format_number(double value) {
  if (value == 0.0) return "0";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

double parse_number(std::string_view text, std::string_view context) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  if (!text.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (text.empty() || ec != std::errc() || ptr != end || !std::isfinite(value))
    throw Error(ErrorCode::kParseError, std::string(context) + ": '" + std::string(text) + "' is not a number");
  return value;
}

}  // namespace fbc::csv
