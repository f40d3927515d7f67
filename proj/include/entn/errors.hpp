#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace entn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input record. `line()` is 1-based; 0 when not tied to a line.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class ArgumentError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

/// Factor / tensor / stream disagree about coordinates or dimensions.
class ConsistencyError : public Error {
public:
    using Error::Error;
};

/// Evaluation protocol violated (missing labels, empty split, single class).
class ProtocolError : public Error {
public:
    using Error::Error;
};

/// Non-finite values or a failed factorization inside the solver.
class NumericalError : public Error {
public:
    NumericalError(std::size_t iteration, const std::string& what)
        : Error("iteration " + std::to_string(iteration) + ": " + what), iteration_(iteration) {}
    std::size_t iteration() const noexcept { return iteration_; }

private:
    std::size_t iteration_;
};

}  // namespace entn
