#include "drowsy/text_format.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <system_error>

#include "drowsy/error.hpp"

namespace drowsy {

std::string format_real(double value) {
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc()) throw Error(ErrorCode::InvalidArgument, "cannot format real");
    return std::string(buf, end);
}

double parse_real(std::string_view token, std::size_t line) {
    if (token == "inf" || token == "+inf") return std::numeric_limits<double>::infinity();
    if (token == "-inf") return -std::numeric_limits<double>::infinity();
    double value = 0.0;
    const char* first = token.data();
    if (!token.empty() && token.front() == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size() || token.empty())
        throw Error(ErrorCode::ParseError,
                    "line " + std::to_string(line) + ": bad real '" + std::string(token) + "'");
    return value;
}

long long parse_integer(std::string_view token, std::size_t line) {
    long long value = 0;
    const char* first = token.data();
    if (!token.empty() && token.front() == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size() || token.empty())
        throw Error(ErrorCode::ParseError,
                    "line " + std::to_string(line) + ": bad integer '" + std::string(token) + "'");
    return value;
}

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

std::string_view LineReader::next(std::string_view what) {
    if (at_end())
        throw Error(ErrorCode::ParseError, "line " + std::to_string(line_ + 1) + ": unexpected end of input, expected " +
                                               std::string(what));
    std::size_t end = text_.find('\n', pos_);
    if (end == std::string_view::npos) end = text_.size();
    std::string_view line = text_.substr(pos_, end - pos_);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos_ = end < text_.size() ? end + 1 : end;
    ++line_;
    return line;
}

bool LineReader::at_end() const noexcept { return pos_ >= text_.size(); }

}  // namespace drowsy
