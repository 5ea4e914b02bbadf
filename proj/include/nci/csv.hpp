#pragma once
//
// Minimal RFC 4180 CSV reading/writing. Quoted fields may contain commas and
// doubled quotes; embedded newlines are not supported.
//

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "nci/core.hpp"

namespace nci::csv {

inline std::vector<std::string> split_line(std::string_view line, std::size_t line_no) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false, was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            if (!cur.empty() || was_quoted) throw ParseError(line_no, "stray quote in field");
            quoted = was_quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
            was_quoted = false;
        } else {
            if (was_quoted) throw ParseError(line_no, "text after closing quote");
            cur.push_back(c);
        }
    }
    if (quoted) throw ParseError(line_no, "unterminated quoted field");
    fields.push_back(std::move(cur));
    return fields;
}

inline std::string escape(std::string_view field) {
    if (field.find_first_of(",\"\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

/// Line-oriented reader that skips `#` comment lines and blank lines.
class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    std::optional<std::vector<std::string>> next() {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty() || line[0] == '#') continue;
            return split_line(line, line_no_);
        }
        return std::nullopt;
    }

    /// Reads the header row and checks it against `expected`.
    void expect_header(const std::vector<std::string>& expected) {
        auto row = next();
        if (!row) throw ParseError(line_no_ == 0 ? 1 : line_no_, "missing header");
        if (*row != expected) {
            std::string want;
            for (auto& e : expected) want += (want.empty() ? "" : ",") + e;
            throw ParseError(line_no_, "unexpected header, want `" + want + "`");
        }
    }

    std::size_t line() const { return line_no_; }

private:
    std::istream& in_;
    std::size_t line_no_ = 0;
};

inline void write_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        out << escape(fields[i]);
    }
    out << '\n';
}

}  // namespace nci::csv
