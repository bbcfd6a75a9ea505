#pragma once

#include <stdexcept>
#include <string>

namespace rttloc {

/// Raised when an input violates a documented precondition.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised by the file loaders. Carries the 1-based line and the offending field.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& field,
               const std::string& what)
        : std::runtime_error(source + ":" + std::to_string(line) + ": field '" + field +
                             "': " + what),
          line_(line), field_(field) {}

    std::size_t line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    std::size_t line_;
    std::string field_;
};

}  // namespace rttloc
