#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace drowsy {

/// Shortest decimal that parses back to the identical double ("inf", "-inf" for infinities).
std::string format_real(double value);

/// Inverse of format_real. Throws Error(ParseError) naming `line` on failure.
double parse_real(std::string_view token, std::size_t line);
long long parse_integer(std::string_view token, std::size_t line);

std::vector<std::string_view> split_ws(std::string_view line);

/// Line cursor over a text document, tracking 1-based line numbers for error messages.
class LineReader {
public:
    explicit LineReader(std::string_view text) : text_(text) {}

    /// Next line (without terminator); throws ParseError if the input is exhausted.
    std::string_view next(std::string_view what);
    bool at_end() const noexcept;
    std::size_t line_number() const noexcept { return line_; }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    std::size_t line_ = 0;
};

}  // namespace drowsy
