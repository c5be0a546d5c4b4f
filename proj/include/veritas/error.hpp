#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace veritas {

// Base class for every error raised by the library. `kind()` is a short
// machine-readable tag used by the CLI for its one-line error output.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& what) : Error("invalid_argument", what) {}
};

// Malformed input file. Line numbers are 1-based; 0 means "not line specific".
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("parse_error", line == 0 ? what : "line " + std::to_string(line) + ": " + what),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Well-formed input whose values violate a domain invariant.
class InvariantError : public Error {
public:
    explicit InvariantError(const std::string& what) : Error("invariant_violation", what) {}
};

class SimulationError : public Error {
public:
    explicit SimulationError(const std::string& what) : Error("simulation_error", what) {}
};

}  // namespace veritas
