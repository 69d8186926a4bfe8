#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hal::csv {

/// RFC 4180 reader: quoted fields may contain commas, doubled quotes and newlines.
class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  /// Next record, or nullopt at end of input. Line numbers count physical lines.
  std::optional<std::vector<std::string>> next();

  /// Physical line on which the last returned record started (1-based).
  std::size_t line() const { return record_line_; }

 private:
  std::istream& in_;
  std::size_t physical_line_ = 1;
  std::size_t record_line_ = 0;
};

/// Quotes a field when it contains a delimiter, quote or newline.
std::string escape(std::string_view field);

std::string trim(std::string_view text);

}  // namespace hal::csv
