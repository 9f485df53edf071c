#include "stancekit/csv.hpp"

#include "stancekit/error.hpp"

#include <iterator>

namespace stancekit::csv {

char detect_delimiter(std::string_view header_line) noexcept {
    return header_line.find('\t') != std::string_view::npos ? '\t' : ',';
}

std::vector<Record> read(std::istream &in, char delimiter) {
    const std::string data{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    std::size_t pos = 0;
    if (data.rfind("\xEF\xBB\xBF", 0) == 0) {
        pos = 3;
    }

    std::vector<Record> records;
    std::size_t line = 1;
    while (pos < data.size()) {
        Record rec;
        rec.line = line;
        std::string field;
        bool in_quotes = false;
        bool field_was_quoted = false;
        bool end_of_record = false;
        while (pos < data.size() && !end_of_record) {
            const char c = data[pos];
            if (in_quotes) {
                if (c == '"') {
                    if (pos + 1 < data.size() && data[pos + 1] == '"') {
                        field.push_back('"');
                        pos += 2;
                        continue;
                    }
                    in_quotes = false;
                } else {
                    if (c == '\n') {
                        ++line;
                    }
                    field.push_back(c);
                }
                ++pos;
                continue;
            }
            if (c == '"' && field.empty() && !field_was_quoted) {
                in_quotes = true;
                field_was_quoted = true;
            } else if (c == delimiter) {
                rec.fields.push_back(std::move(field));
                field.clear();
                field_was_quoted = false;
            } else if (c == '\r' && pos + 1 < data.size() && data[pos + 1] == '\n') {
                // handled by the '\n' branch on the next iteration
            } else if (c == '\n') {
                ++line;
                end_of_record = true;
            } else {
                field.push_back(c);
            }
            ++pos;
        }
        if (in_quotes) {
            throw MalformedRow(rec.line, "unterminated quoted field");
        }
        rec.fields.push_back(std::move(field));
        const bool blank = rec.fields.size() == 1 && rec.fields.front().empty() && !field_was_quoted;
        if (!blank) {
            records.push_back(std::move(rec));
        }
    }
    return records;
}

std::string escape(std::string_view field, char delimiter) {
    const bool needs_quotes = field.find_first_of(std::string{delimiter, '"', '\n', '\r'}) != std::string_view::npos
                              || (!field.empty() && (field.front() == ' ' || field.back() == ' ' || field.front() == '\t' || field.back() == '\t'));
    if (!needs_quotes) {
        return std::string(field);
    }
    std::string out;
    out.reserve(field.size() + 2);
    out.push_back('"');
    for (const char c : field) {
        if (c == '"') {
            out.push_back('"');
        }
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string format_row(const std::vector<std::string> &fields, char delimiter) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i != 0) {
            out.push_back(delimiter);
        }
        out += escape(fields[i], delimiter);
    }
    return out;
}

}  // namespace stancekit::csv
