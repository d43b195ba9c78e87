#pragma once

#include <stdexcept>
#include <string>

namespace seqlsi {

// Violated precondition or invalid combination of inputs (bad spec/theta pairing,
// empty input where data is required, zero-width interval, ...).
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Non-finite or out-of-range numeric input.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Numerical failure during computation (NaN state, degenerate mixture weights).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed configuration or data file; carries the 1-based line number (0 if unknown).
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : std::runtime_error(source + (line ? ":" + std::to_string(line) : std::string()) + ": " + what),
          line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace seqlsi
