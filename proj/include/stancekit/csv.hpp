#pragma once

#include <cstddef>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace stancekit::csv {

struct Record {
    std::size_t line = 0;  ///< 1-based line on which the record starts
    std::vector<std::string> fields;
};

/// Tab if the header line contains one, otherwise comma.
[[nodiscard]] char detect_delimiter(std::string_view header_line) noexcept;

/// RFC 4180 style reader: double-quoted fields may hold delimiters, quotes
/// ("" escapes) and line breaks. A leading UTF-8 BOM is skipped. Blank lines
/// are ignored. Throws MalformedRow on an unterminated quote.
[[nodiscard]] std::vector<Record> read(std::istream &in, char delimiter);

/// Quote the field when it contains the delimiter, a quote, a line break or
/// leading/trailing whitespace.
[[nodiscard]] std::string escape(std::string_view field, char delimiter);

[[nodiscard]] std::string format_row(const std::vector<std::string> &fields, char delimiter);

}  // namespace stancekit::csv
