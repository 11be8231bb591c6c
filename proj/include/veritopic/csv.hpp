#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace veritopic::csv {

// A parsed record plus the 1-based line number it started on.
struct Record {
  std::vector<std::string> fields;
  std::size_t line = 0;
};

// RFC 4180: quoted fields may contain commas, doubled quotes and line breaks.
// LF and CRLF line endings are accepted; a leading UTF-8 BOM is skipped.
// Blank lines are skipped.
std::vector<Record> parse(std::string_view text);

}  // namespace veritopic::csv
