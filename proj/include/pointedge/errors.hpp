#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pointedge {

/// Raised when caller-supplied data violates an operation's preconditions.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised while reading text inputs; `line()` is 1-based, 0 when not tied to a line.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// A broken internal invariant (e.g. a graph layer with a point lacking out-edges).
class InternalError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace pointedge
