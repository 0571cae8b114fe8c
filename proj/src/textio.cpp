#include "pbcs/textio.hpp"

#include <charconv>
#include <cstdio>
#include <istream>
#include <sstream>

namespace pbcs {

ParseError::ParseError(std::string source, std::size_t line, const std::string& what)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + what),
      source_(std::move(source)),
      line_(line) {}

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_real(std::string_view token) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
        throw std::invalid_argument("not a real number: '" + std::string(token) + "'");
    }
    return v;
}

std::int64_t parse_int(std::string_view token) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
        throw std::invalid_argument("not an integer: '" + std::string(token) + "'");
    }
    return v;
}

std::uint64_t parse_uint(std::string_view token) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
        throw std::invalid_argument("not an unsigned integer: '" + std::string(token) + "'");
    }
    return v;
}

std::vector<std::string> split_ws(std::string_view line) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
        if (j > i) out.emplace_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

std::map<std::string, std::string> header_fields(const std::vector<std::string>& tokens) {
    std::map<std::string, std::string> out;
    for (const auto& t : tokens) {
        auto eq = t.find('=');
        if (eq == std::string::npos) continue;
        out[t.substr(0, eq)] = t.substr(eq + 1);
    }
    return out;
}

LineReader::LineReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

bool LineReader::next_tokens(std::vector<std::string>& out) {
    std::string line;
    while (std::getline(in_, line)) {
        ++line_;
        out = split_ws(line);
        if (!out.empty()) return true;
    }
    ++line_;
    return false;
}

std::vector<std::string> LineReader::expect_tokens(const std::string& what) {
    std::vector<std::string> toks;
    if (!next_tokens(toks)) fail("unexpected end of input, expected " + what);
    return toks;
}

void LineReader::fail(const std::string& what) const { throw ParseError(source_, line_, what); }

const std::string& require_field(const std::map<std::string, std::string>& fields,
                                 const std::string& key, const LineReader& reader) {
    auto it = fields.find(key);
    if (it == fields.end()) reader.fail("missing header field '" + key + "'");
    return it->second;
}

}  // namespace pbcs
