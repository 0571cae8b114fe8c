#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pbcs {

/// Raised by every line-oriented reader; carries the 1-based line number
/// of the offending input and a short description.
class ParseError : public std::runtime_error {
public:
    ParseError(std::string source, std::size_t line, const std::string& what);

    const std::string& source() const { return source_; }
    std::size_t line() const { return line_; }

private:
    std::string source_;
    std::size_t line_;
};

/// 17 significant digits, round-trips any double exactly.
std::string format_real(double v);

double parse_real(std::string_view token);
std::int64_t parse_int(std::string_view token);
std::uint64_t parse_uint(std::string_view token);

std::vector<std::string> split_ws(std::string_view line);

/// Parses `key=value` tokens such as `N=5` out of a header line; tokens
/// without '=' are ignored.
std::map<std::string, std::string> header_fields(const std::vector<std::string>& tokens);

/// Sequential line reader that remembers the current line number for
/// error reporting.
class LineReader {
public:
    LineReader(std::istream& in, std::string source);

    /// Next non-empty line split on whitespace; throws ParseError at EOF.
    std::vector<std::string> expect_tokens(const std::string& what);
    bool next_tokens(std::vector<std::string>& out);

    [[noreturn]] void fail(const std::string& what) const;
    std::size_t line() const { return line_; }
    const std::string& source() const { return source_; }

private:
    std::istream& in_;
    std::string source_;
    std::size_t line_ = 0;
};

/// Looks up a header field, failing with the reader's position if absent.
const std::string& require_field(const std::map<std::string, std::string>& fields,
                                 const std::string& key, const LineReader& reader);

}  // namespace pbcs
