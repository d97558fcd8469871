#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace csight {

// Malformed input text or bytes. Carries the 1-based line number for
// line-oriented formats (0 when the format has no line structure).
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// Structurally valid input that violates an operation's preconditions
// (out-of-range parameter, size cap exceeded, degenerate data).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace csight
